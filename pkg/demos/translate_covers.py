"""Finite-codimensional balls produced by translate covers.

The first part uses the body A = {q x_1^2 + ... <= 1} with the small box K
of side 2^-n; A + K covers a ball, and a finite net of translates of A
already contains a codimension-1 ball.
"""
from cclab.codim import (TranslateCoverSpec, counterexample_check, hexagon_check,
                         hilbert_codim, counterexample_bodies, translate_theorem)
from cclab.experiments import translate_case

rep = hexagon_check(20000, 256, rng=0)
print(f"hexagon tiling: passed {rep.passed}, worst margin {rep.worst_margin:.2e}")

A, O = translate_case("counterexample", 16)
tr = translate_theorem(TranslateCoverSpec(A, O, 0.2), rng=1, n_verify=5000)
print(f"translate cover: dim Y = {tr.Y.dim}, |H| = {len(tr.H)}, max dist {tr.max_dist:.2e}")

A, K = counterexample_bodies(16)
h = hilbert_codim(A, K, 0.1, rng=2)
print(f"coordinate cut for eps=0.1: n = {h.cut} (delta = {h.delta:.5f}), passed {h.passed}")

c = counterexample_check(16, samples=20000, rng=3)
print("distance from e_n to A:", [f"{d:.4g}" for d in c.axis_dist[:6]])
