"""Inscribed balls of prescribed dimension and the asymptotic inradius estimate.

``max_inscribed_ball`` is a heuristic: it alternates center moves with
random plane rotations of the subspace and always returns a witness that
has been re-verified on fresh directions, so its radius is a lower bound
for the true n-dimensional inradius.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from . import lp
from .bodies import (Ball, ConvexBody, Intersection, Polytope, Scale, Translate,
                     sample_uniform, section_support)
from .covers import Cover, verify_cover
from .errors import PreconditionError
from .spaces import (L1, L2, AmbientNorm, Subspace, derive_rng, make_rng,
                     random_frame, sample_ball, unit_sphere_samples)
from .tolerances import DEFAULT


@dataclass
class InscribedBall:
    center: np.ndarray
    subspace: Subspace
    radius: float
    exact: bool = True
    flag: Optional[str] = None

    @property
    def dim(self) -> int:
        return self.subspace.dim


class FixedRadius(NamedTuple):
    radius: float
    exact: bool
    inside: bool


def _basis(F):
    return F.basis if isinstance(F, Subspace) else np.asarray(F, dtype=float)


def _directions(Fb, norm, m, rng):
    n = Fb.shape[1]
    D = np.vstack([Fb.T, -Fb.T])
    if m:
        D = np.vstack([D, rng.standard_normal((m, n)) @ Fb.T])
    return D / norm(D)[:, None]


def sampled_section_radius(body: ConvexBody, x, Fb, norm: AmbientNorm = L2, rng=0,
                           n_dirs: Optional[int] = None, tol: float = DEFAULT.witness) -> float:
    """Bisection on λ with inclusion tested on sampled unit directions of F."""
    x = np.asarray(x, dtype=float)
    n = Fb.shape[1]
    if n == 0:
        return np.inf
    U = _directions(Fb, norm, 2 * n * 64 if n_dirs is None else n_dirs, make_rng(rng))
    ok = lambda lam: bool(np.all(np.atleast_1d(body.violation(x + lam * U)) <= 0))
    if not ok(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            return np.inf
    while hi - lo > tol * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def _radius(body, x, Fb, norm, rng=None):
    try:
        return body.section_radius(x, Fb, norm), True
    except NotImplementedError:
        return sampled_section_radius(body, x, Fb, norm, rng if rng is not None else 0), False


def inscribed_radius_fixed(body: ConvexBody, F, x, norm: AmbientNorm = L2, rng=0) -> FixedRadius:
    """Largest λ with ``x + λ (B_X ∩ F) ⊂ body``.

    Exact when the body exposes a closed form (polytopes via section
    supports, Euclidean balls, quadratic bodies, their intersections),
    otherwise a sampled bisection reported with ``exact=False``.
    """
    norm = AmbientNorm.parse(norm)
    x = np.asarray(x, dtype=float)
    if not body.contains(x, DEFAULT.membership):
        return FixedRadius(0.0, True, False)
    r, exact = _radius(body, x, _basis(F), norm, rng)
    return FixedRadius(float(max(r, 0.0)), exact, True)


def verify_witness(body: ConvexBody, ball: InscribedBall, n_dirs: int = 1000, rng=0,
                   norm: AmbientNorm = L2, shrink: float = 1.0,
                   tol: float = DEFAULT.witness) -> bool:
    """``center + shrink*radius*u`` in body for fresh unit ``u`` of the subspace."""
    if ball.radius == 0:
        return bool(body.contains(ball.center, tol))
    U = _directions(ball.subspace.basis, norm, n_dirs, make_rng(rng))
    P = ball.center + shrink * ball.radius * U
    return bool(np.all(np.atleast_1d(body.violation(P)) <= tol))


# ---------------------------------------------------------------------------
# optimizer

def _center_lp(body, Fb, Wb, x, norm):
    """Exact center step for polyhedral bodies; None when unavailable.

    Scale and Translate are unwrapped so the step commutes with homotheties.
    """
    if isinstance(body, Scale):
        r = _center_lp(body.body, Fb, Wb, x / body.lam, norm)
        return None if r is None else (body.lam * r[0], body.lam * r[1])
    if isinstance(body, Translate):
        r = _center_lp(body.body, Fb, Wb, x - body.t, norm)
        return None if r is None else (r[0] + body.t, r[1])
    H = body.halfspaces()
    if H is None:
        return None
    A, b = H
    s = section_support(norm, Fb, A)
    base = x - Wb @ (Wb.T @ x)
    w = Wb.shape[1]
    c = np.zeros(w + 1)
    c[-1] = 1.0
    res = lp.maximize(c, A_ub=np.column_stack([A @ Wb, s]), b_ub=b - A @ base,
                      bounds=[(None, None)] * w + [(0, None)])
    if res.status != "optimal":
        return None
    return base + Wb @ res.x[:w], float(res.x[-1])


def _rotate(Fb, Wb, rng, theta):
    """Rotate F by ``theta`` in the plane of a random unit ``u`` in F and ``v`` in W ⊖ F."""
    n = Fb.shape[1]
    u = Fb @ rng.standard_normal(n)
    u /= np.linalg.norm(u)
    g = Wb @ rng.standard_normal(Wb.shape[1])
    v = g - Fb @ (Fb.T @ g)
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return None
    v /= nv
    cu = u @ Fb  # coordinates of u in the basis
    G = Fb + np.outer((np.cos(theta) - 1.0) * u + np.sin(theta) * v, cu)
    # re-orthonormalize against drift
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.diag(R))


@dataclass
class SearchOptions:
    restarts: int = 16
    steps: int = 200
    seed: int = 0
    norm: AmbientNorm = L2
    theta0: float = 0.5
    theta_floor: float = 1e-4
    patience: int = 40
    verify_dirs: int = 1000


def _single_run(body, n, Wb, norm, rng, steps, opts, x0=None, F0=None):
    N = body.dim
    w = Wb.shape[1]
    lo, hi = body.bounding_box
    span = hi - lo
    finite = np.all(np.isfinite(span))
    scale = float(np.max(span)) if finite else 1.0
    if x0 is None:
        x = body.deep_point(norm)
    else:
        x = np.asarray(x0, dtype=float).copy()
    if F0 is None:
        Fb = Wb @ random_frame(w, n, rng)
    else:
        Fb = np.asarray(F0, dtype=float).copy()
    r, exact = _radius(body, x, Fb, norm)
    theta = opts.theta0
    dirs = np.vstack([Wb.T, -Wb.T])
    order = list(range(dirs.shape[0]))
    cstep = 0.05 * scale
    cfloor = 1e-9 * scale
    stale = 0
    for _ in range(steps):
        improved = False
        # center step
        step = _center_lp(body, Fb, Wb, x, norm)
        if step is not None:
            xn = step[0]
            rn, e = _radius(body, xn, Fb, norm)
            if rn > r:
                x, r, exact, improved = xn, rn, e, True
        elif cstep > cfloor:
            # one opportunistic pattern sweep with a persistent step size
            for pos, kdir in enumerate(order):
                xn = x + cstep * dirs[kdir]
                rn, e = _radius(body, xn, Fb, norm)
                if rn > r:
                    x, r, exact, improved = xn, rn, e, True
                    order.insert(0, order.pop(pos))
                    break
            else:
                cstep *= 0.5
        # subspace step
        if n < w:
            G = _rotate(Fb, Wb, rng, theta)
            if G is not None:
                rn, e = _radius(body, x, G, norm)
                if rn > r:
                    Fb, r, exact, improved = G, rn, e, True
                    theta = min(opts.theta0, 1.5 * theta)
                else:
                    theta = max(opts.theta_floor, 0.5 * theta)
        stale = 0 if improved else stale + 1
        if stale >= opts.patience and (n == w or theta <= opts.theta_floor):
            break
    return x, Fb, float(max(r, 0.0)), exact


def max_inscribed_ball(body: ConvexBody, n: int, restarts: int = 16, steps: int = 200,
                       rng=0, norm: AmbientNorm = L2, search_space: Optional[Subspace] = None,
                       x0=None, F0=None, options: Optional[SearchOptions] = None) -> InscribedBall:
    """Best verified ``n``-dimensional inscribed ball over ``restarts`` runs.

    ``search_space`` confines the subspace (and center moves) to ``W``;
    ``x0``/``F0`` warm-start restart 0. Restart ``i`` draws from the stream
    derived from ``(seed, i)``. Ties go to the smaller center norm, then the
    lexicographically smaller basis.
    """
    norm = AmbientNorm.parse(norm)
    opts = options or SearchOptions(restarts=restarts, steps=steps, norm=norm)
    N = body.dim
    Wb = np.eye(N) if search_space is None else search_space.basis
    if not 1 <= n <= Wb.shape[1]:
        raise PreconditionError(f"need 1 <= n <= {Wb.shape[1]}, got {n}")
    seed = int(rng) if not isinstance(rng, np.random.Generator) else int(rng.integers(2 ** 62))
    try:
        c0 = body.deep_point(norm)
        depth = body.interior_radius_at(c0, norm)
    except NotImplementedError:
        depth = 1.0
    if not depth > 0:
        c0 = body.deep_point(norm) if body.is_polyhedral else np.zeros(N)
        return InscribedBall(c0, Subspace(Wb @ np.eye(Wb.shape[1])[:, :n]), 0.0, True, "no-interior")
    best = None
    lo, hi = body.bounding_box
    for i in range(restarts):
        r_i = derive_rng(seed, i)
        if i == 0:
            start, F_start = x0, F0
        else:
            start = _random_start(body, lo, hi, r_i, norm)
            F_start = None
        x, Fb, rad, exact = _single_run(body, n, Wb, norm, r_i, steps, opts, start, F_start)
        key = (-rad, float(np.linalg.norm(x)), tuple(Fb.ravel()))
        if best is None or key < best[0]:
            best = (key, x, Fb, rad, exact)
    _, x, Fb, rad, exact = best
    ball = InscribedBall(x, Subspace(Fb), rad, exact)
    # fresh-direction audit; shrink if the witness is sampled and fails
    audit = derive_rng(seed, 1 << 20)
    for _ in range(60):
        if verify_witness(body, ball, opts.verify_dirs, audit, norm, 1.0, DEFAULT.witness):
            break
        ball.radius *= 1.0 - 1e-4
        ball.exact = False
        ball.flag = "shrunk"
    else:
        ball.radius = 0.0
        ball.flag = "unverified"
    return ball


def _random_start(body, lo, hi, rng, norm):
    # bounding-box draw pulled toward the deep point until inside
    c = body.deep_point(norm)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        return c
    y = lo + (hi - lo) * rng.random(body.dim)
    t = 1.0
    for _ in range(60):
        p = c + t * (y - c)
        if body.contains(p, 0.0):
            return c + 0.5 * t * (y - c)
        t *= 0.5
    return c


# ---------------------------------------------------------------------------
# asymptotic inradius curve

@dataclass
class RhoEntry:
    n: int
    radius: float
    witness: InscribedBall


@dataclass
class RhoCurve:
    entries: List[RhoEntry]
    seed: int = 0

    @property
    def radii(self) -> np.ndarray:
        return np.array([e.radius for e in self.entries])

    @property
    def dims(self) -> List[int]:
        return [e.n for e in self.entries]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "radius", "center_norm", "seed"])
            for e in self.entries:
                w.writerow([e.n, repr(e.radius), repr(float(np.linalg.norm(e.witness.center))), self.seed])


def _extend(Fb, Wb, rng, m):
    """Append ``m`` random orthonormal directions of W ⊖ F."""
    for _ in range(m):
        g = Wb @ rng.standard_normal(Wb.shape[1])
        v = g - Fb @ (Fb.T @ g)
        Fb = np.column_stack([Fb, v / np.linalg.norm(v)])
    return Fb


def rho_hat(body: ConvexBody, n_list: Sequence[int], restarts: int = 16, steps: int = 200,
            rng=0, norm: AmbientNorm = L2, search_space: Optional[Subspace] = None) -> RhoCurve:
    """Best radius per dimension, warm-starting each ``n`` from the previous witness.

    A backward pass makes the curve non-increasing: an ``(n+1)``-witness
    restricted to its first ``n`` basis vectors is an ``n``-witness.
    """
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise PreconditionError("n_list must be strictly increasing")
    norm = AmbientNorm.parse(norm)
    seed = int(rng) if not isinstance(rng, np.random.Generator) else int(rng.integers(2 ** 62))
    Wb = np.eye(body.dim) if search_space is None else search_space.basis
    entries: List[RhoEntry] = []
    prev = None
    for idx, n in enumerate(n_list):
        sub_seed = seed * 1009 + idx
        if prev is None or prev.radius == 0:
            ball = max_inscribed_ball(body, n, restarts, steps, sub_seed, norm, search_space)
        else:
            F0 = _extend(prev.subspace.basis, Wb, derive_rng(sub_seed, 1 << 21), n - prev.dim)
            ball = max_inscribed_ball(body, n, restarts, steps, sub_seed, norm, search_space,
                                      x0=prev.center, F0=F0)
        entries.append(RhoEntry(n, ball.radius, ball))
        prev = ball
    for i in range(len(entries) - 2, -1, -1):
        hi = entries[i + 1]
        if hi.radius > entries[i].radius:
            w = hi.witness
            sub = Subspace(w.subspace.basis[:, : entries[i].n])
            ball = InscribedBall(w.center.copy(), sub, hi.radius, w.exact, "restricted")
            entries[i] = RhoEntry(entries[i].n, hi.radius, ball)
    return RhoCurve(entries, seed)


# ---------------------------------------------------------------------------
# rule checks

@dataclass
class RhoRulesReport:
    contained: bool
    covered: bool
    monotone: bool
    monotone_gaps: List[float]
    homogeneous: bool
    homogeneity_error: float
    cover_rule: List[dict]
    cover_rule_ok: bool
    curve_A: RhoCurve
    curve_B: List[float]

    @property
    def ok(self) -> bool:
        return self.contained and self.covered and self.monotone and self.homogeneous


def check_rho_rules(A: ConvexBody, B: ConvexBody, pieces: Sequence[ConvexBody],
                    n_list: Sequence[int] = (1, 2), lam: float = 2.0, restarts: int = 4,
                    steps: int = 60, rng=0, norm: AmbientNorm = L2, n_samples: int = 5000,
                    slack: float = 2e-3) -> RhoRulesReport:
    """Witness-level versions of monotonicity, homogeneity and the cover rule.

    Monotonicity: B's search is warm-started from A's witness, so the B value
    can only be larger. Homogeneity: the curve of ``lam*A`` is compared
    entrywise with ``lam`` times the curve of A under the same seed. Cover
    rule: ``λ_A(n) <= max_j λ_{A_j}(n) + slack`` is reported per ``n`` and is
    not fatal (a miss means the optimizer underperformed on the pieces).
    """
    seed = int(rng)
    S = sample_uniform(A, n_samples, derive_rng(seed, 7))
    contained = bool(np.all(np.atleast_1d(B.contains(S, DEFAULT.membership))))
    covered = verify_cover(Cover(A, tuple(pieces)), n_samples, derive_rng(seed, 8)).covered
    curve = rho_hat(A, n_list, restarts, steps, seed, norm)
    gaps, vals_B = [], []
    for e in curve.entries:
        wb = max_inscribed_ball(B, e.n, restarts, steps, seed, norm,
                                x0=e.witness.center, F0=e.witness.subspace.basis)
        vals_B.append(wb.radius)
        gaps.append(wb.radius - e.radius)
    monotone = all(g >= -1e-12 for g in gaps)
    scaled = rho_hat(Scale(A, lam), n_list, restarts, steps, seed, norm)
    ref = lam * curve.radii
    err = float(np.max(np.abs(scaled.radii - ref) / np.maximum(1.0, np.abs(ref))))
    homogeneous = err <= 1e-12
    rule = []
    for e in curve.entries:
        per_piece = [max_inscribed_ball(p, e.n, restarts, steps, seed, norm).radius for p in pieces]
        best = max(per_piece)
        rule.append({"n": e.n, "lambda_A": e.radius, "max_piece": best,
                     "pieces": per_piece, "holds": bool(e.radius <= best + slack)})
    return RhoRulesReport(contained, covered, monotone, gaps, homogeneous, err, rule,
                          all(r["holds"] for r in rule), curve, vals_B)


# ---------------------------------------------------------------------------
# the ℓ1 example

def positive_simplex(N: int) -> Polytope:
    """``{x >= 0, sum x <= 1}``, the positive part of the ℓ1 unit ball."""
    A = np.vstack([-np.eye(N), np.ones((1, N))])
    b = np.concatenate([np.zeros(N), [1.0]])
    return Polytope(A, b)


@dataclass
class Ell1Report:
    N: int
    samples: int
    split_exact: bool
    parts_inside: bool
    curve: RhoCurve

    @property
    def strictly_decreasing(self) -> bool:
        r = self.curve.radii
        return bool(np.all(np.diff(r) < 0))


def ell1_example_check(N: int, n_list: Sequence[int] = (1, 2, 4), samples: int = 10000,
                       rng=0, restarts: int = 4, steps: int = 60) -> Ell1Report:
    """``B_ℓ1 = A - A`` for the positive part ``A``, plus A's ρ-curve in the ℓ1 norm."""
    if N < 2:
        raise PreconditionError("N must be >= 2")
    seed = int(rng)
    A = positive_simplex(N)
    X = sample_ball(L1, N, samples, derive_rng(seed, 0))
    a, a2 = np.maximum(X, 0.0), np.maximum(-X, 0.0)
    split = bool(np.array_equal(a - a2, X))
    inside = bool(np.all(A.contains(a)) and np.all(A.contains(a2)))
    curve = rho_hat(A, n_list, restarts, steps, seed, L1)
    return Ell1Report(N, samples, split, inside, curve)
