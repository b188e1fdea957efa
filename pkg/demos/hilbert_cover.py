"""Hilbert-space cover walkthrough.

Builds the 2k+1 piece cover of the unit ball, checks it on random samples,
then searches each piece for the largest 2-dim ball inside it.
"""
from cclab import HilbertCoverSpec, build_hilbert_cover, verify_cover
from cclab.covers import hilbert_search_space, rk_bound
from cclab.inradius import max_inscribed_ball

for k in (1, 2):
    spec = HilbertCoverSpec(k, 12)
    cover = build_hilbert_cover(spec)
    rep = verify_cover(cover, 50000, rng=k)
    print(f"k={k}: {len(cover.pieces)} pieces, uncovered {rep.uncovered.shape[0]}, "
          f"certificate ok {rep.certificate_ok}")
    for j, piece in enumerate(cover.pieces, 1):
        ball = max_inscribed_ball(piece, 2, restarts=4, rng=j,
                                  search_space=hilbert_search_space(spec, j))
        print(f"  piece {j}: 2-dim ball of radius {ball.radius:.4f}")
    print(f"  analytic bound r_{k} = {rk_bound(k):.4f}")
