"""Finite-codimensional balls inside convex sets.

Boundary nets and supporting functionals give a projection onto a small
subspace F whose kernel Y is cut out by the functionals and which almost
preserves the gauge. From it come the translate theorem (a ball of Y inside
``A - H`` up to ε), the half-radius corollary for balanced sets, the
Hilbert-space version by uniform convexity, and two worked examples: the
hexagon whose vertex translates cover the disc, and the ellipsoid showing
the ε-perturbation cannot be dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import cKDTree

from .bodies import Ball, Box, ConvexBody, Intersection, Polytope, QuadLin, Scale, Translate, sample_uniform
from .covers import expansion_delta
from .errors import ConvergenceError, PreconditionError, VerificationError
from .spaces import (L2, AmbientNorm, Subspace, derive_rng, make_rng, random_unit_vectors,
                     sample_ball, sample_subspace_ball, sphere_mesh, subspace_sphere_mesh,
                     unit_sphere_samples)
from .tolerances import DEFAULT


# ---------------------------------------------------------------------------
# nets and functionals

@dataclass
class BoundaryNet:
    points: np.ndarray
    resolution: int
    max_gap: float


def boundary_net(A: ConvexBody, F: Subspace, delta_p: float, start: int = 8,
                 max_resolution: int = 4096, validate_factor: int = 4) -> BoundaryNet:
    """Points of ``F ∩ ∂A`` such that every boundary point ``y`` of the
    validation mesh has a net point with ``Λ(x_i - y) < δ'``.

    Mesh directions of F are pushed onto the boundary by ``x -> x / Λ(x)``;
    the resolution doubles until a ``validate_factor`` times finer mesh
    passes.
    """
    if not 0 < delta_p:
        raise PreconditionError("delta' must be > 0")
    n = F.dim
    if n == 0:
        return BoundaryNet(np.zeros((0, F.ambient_dim)), 0, 0.0)
    if n > 3:
        raise PreconditionError("boundary nets need dim(F) <= 3")
    A._require_zero_interior()

    def image(res):
        D = subspace_sphere_mesh(F, res)
        return D / np.atleast_1d(A.gauge(D))[:, None]

    res = start
    while True:
        X = image(res)
        if n == 1:
            return BoundaryNet(X, res, 0.0)
        Y = image(validate_factor * res)
        gap = _net_gap(A, X, Y, F)
        if gap < delta_p:
            return BoundaryNet(X, res, gap)
        res *= 2
        if res > max_resolution:
            raise ConvergenceError("boundary net did not reach the requested density", best=gap)


def _net_gap(A, X, Y, F, k=8):
    # compare in F coordinates; the nearest Euclidean neighbours bound the search
    cx, cy = X @ F.basis, Y @ F.basis
    k = min(k, X.shape[0])
    _, idx = cKDTree(cx).query(cy, k=k)
    idx = np.atleast_2d(idx.reshape(cy.shape[0], k))
    diffs = X[idx] - Y[:, None, :]
    g = np.atleast_1d(A.gauge(diffs.reshape(-1, X.shape[1]))).reshape(idx.shape)
    return float(np.max(g.min(axis=1)))


@dataclass
class SupportingFunctional:
    vector: np.ndarray
    touch_point: np.ndarray


def _normal(A, x, tol):
    """Outward normal at x; polyhedral bodies use the first active row."""
    H = A.halfspaces()
    if H is not None:
        Am, b = H
        r = Am @ x - b
        active = np.flatnonzero(np.abs(r) <= tol * max(1.0, float(np.max(np.abs(b)))))
        if active.size == 0:
            raise PreconditionError("no active constraint at x (not a boundary point)")
        return Am[active[0]]
    if isinstance(A, Scale):
        return _normal(A.body, x / A.lam, tol)
    if isinstance(A, Translate):
        return _normal(A.body, x - A.t, tol)
    if isinstance(A, Intersection):
        v = [float(m.violation(x)) for m in A.members]
        j = int(np.argmax(v))
        if abs(v[j]) > tol:
            raise PreconditionError("no active constraint at x (not a boundary point)")
        return _normal(A.members[j], x, tol)
    if abs(float(A.violation(x))) > tol:
        raise PreconditionError("no active constraint at x (not a boundary point)")
    return A.outward_normal(x)


def supporting_functional(A: ConvexBody, x, rng=0, n_check: int = 1000,
                          tol: float = 1e-6) -> SupportingFunctional:
    """Vector ``v`` with ``v.x = 1`` and ``v.y <= Λ(y)`` for all y (sampled)."""
    x = np.asarray(x, dtype=float)
    g = float(A.gauge(x))
    if abs(g - 1.0) > 1e-7:
        raise PreconditionError(f"x is not on the boundary (gauge {g:.12g})")
    nrm = np.asarray(_normal(A, x, tol), dtype=float)
    s = float(nrm @ x)
    if not s > 0:
        raise PreconditionError("degenerate normal at x")
    v = nrm / s
    rng = make_rng(rng)
    Y = rng.standard_normal((n_check, x.size))
    if np.any(v @ Y.T > np.atleast_1d(A.gauge(Y)) + 1e-8):
        raise VerificationError("supporting functional is not dominated by the gauge", witness=v)
    return SupportingFunctional(v, x)


# ---------------------------------------------------------------------------
# the projection

@dataclass
class ProjectionSystem:
    F: Subspace
    Y: Subspace
    functionals: List[SupportingFunctional]
    P: np.ndarray
    delta: float
    net: BoundaryNet
    max_ratio: float = float("nan")

    @property
    def dim_Z(self) -> int:
        return self.F.dim + self.Y.dim

    def sample_Z(self, m: int, rng) -> np.ndarray:
        rng = make_rng(rng)
        B = np.hstack([self.F.basis, self.Y.basis])
        return rng.standard_normal((m, B.shape[1])) @ B.T

    def idempotence_error(self) -> float:
        return float(np.max(np.abs(self.P @ self.P - self.P)))


def build_projection(A: ConvexBody, F: Subspace, delta: float, rng=0, n_check: int = 10000,
                     retries: int = 3, slack: float = DEFAULT.audit_slack) -> ProjectionSystem:
    """Projection P onto F with kernel ``Y = ∩ ker x_i*`` and ``Λ(Pz) <= (1+δ) Λ(z)`` on ``Z = F + Y``.

    P is the projection of Z onto F along Y, extended by 0 on the orthogonal
    complement of Z (in finite dimensions Z may be a proper subspace).
    """
    if not delta > 0:
        raise PreconditionError("delta must be > 0")
    N = F.ambient_dim
    if F.dim == 0:
        P = np.zeros((N, N))
        return ProjectionSystem(F, Subspace.full(N), [], P, delta, BoundaryNet(np.zeros((0, N)), 0, 0.0), 0.0)
    rng = make_rng(rng)
    dp = 1.0 - 1.0 / (1.0 + delta)
    for attempt in range(retries + 1):
        net = boundary_net(A, F, dp)
        fun = [supporting_functional(A, x, rng) for x in net.points]
        Phi = np.array([f.vector for f in fun])
        if np.linalg.matrix_rank(Phi @ F.basis, tol=1e-9) == F.dim:
            break
        dp *= 0.5
    else:
        raise VerificationError("F + Y is not a direct sum after refinement", witness=Phi)
    Yb = null_space(Phi, rcond=1e-10)
    Y = Subspace(Yb) if Yb.shape[1] else Subspace.zero(N)
    M = np.hstack([F.basis, Y.basis])
    sel = np.zeros((F.dim, M.shape[1]))
    sel[:, : F.dim] = np.eye(F.dim)
    P = F.basis @ sel @ np.linalg.pinv(M)
    system = ProjectionSystem(F, Y, fun, P, delta, net)
    Z = system.sample_Z(n_check, rng)
    gz = np.atleast_1d(A.gauge(Z))
    gp = np.atleast_1d(A.gauge(Z @ P.T))
    ratio = gp / np.where(gz > 0, gz, np.inf)
    system.max_ratio = float(np.max(ratio))
    if np.any(gp > (1.0 + delta) * gz + slack):
        i = int(np.argmax(gp - (1.0 + delta) * gz))
        raise VerificationError("gauge inequality fails on Z", witness=Z[i])
    return system


# ---------------------------------------------------------------------------
# translate theorem

@dataclass
class TranslateCoverSpec:
    A: ConvexBody
    O: np.ndarray
    eps: float

    def __post_init__(self):
        self.O = np.atleast_2d(np.asarray(self.O, dtype=float))
        if self.O.shape[1] != self.A.dim:
            raise PreconditionError("points of O have the wrong dimension")


def check_translate_cover(A: ConvexBody, O, samples: int, rng, tol: float = DEFAULT.membership,
                          ball: Optional[ConvexBody] = None):
    """Sampled ``B ⊂ A + O``; returns the first uncovered sample or None."""
    ball = ball or Ball.unit(A.dim)
    X = sample_uniform(ball, samples, make_rng(rng))
    ok = np.zeros(samples, dtype=bool)
    for o in np.atleast_2d(O):
        ok |= np.atleast_1d(A.violation(X - o)) <= tol
    return None if ok.all() else X[int(np.argmin(ok))]


def _grid_net(A, F, step):
    """Grid points of ``F ∩ A`` with spacing ``step`` in F coordinates."""
    lo, hi = A.bounding_box
    R = float(np.max(np.abs(np.concatenate([lo, hi]))))
    n = F.dim
    m = int(math.ceil(R / step))
    axis = step * np.arange(-m, m + 1)
    G = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    X = G @ F.basis.T
    return X[np.atleast_1d(A.violation(X)) <= 0]


def farthest_point_net(P: np.ndarray, radius: float, norm: AmbientNorm = L2) -> np.ndarray:
    """Greedy farthest-point subset H with every point of P within ``radius`` of H."""
    if P.shape[0] == 0:
        return P
    # deterministic start: the point closest to the centroid
    c = P.mean(axis=0)
    i0 = int(np.argmin(norm(P - c)))
    chosen = [i0]
    d = norm(P - P[i0])
    while True:
        j = int(np.argmax(d))
        if d[j] <= radius:
            break
        chosen.append(j)
        d = np.minimum(d, norm(P - P[j]))
    return P[chosen]


@dataclass
class TranslateResult:
    Y: Subspace
    H: np.ndarray
    F: Subspace
    delta: float
    shift: np.ndarray
    projection: ProjectionSystem
    max_dist: float
    samples: int
    passed: bool


def _min_translate_dist(A, Ypts, H, norm):
    """``min_h dist(A, y + h)`` per row; membership screens most rows first."""
    out = np.full(Ypts.shape[0], np.inf)
    for h in H:
        inside = np.atleast_1d(A.violation(Ypts + h)) <= 0
        out[inside] = 0.0
    rest = np.flatnonzero(out > 0)
    for h in H:
        if rest.size == 0:
            break
        d = np.atleast_1d(A.dist(Ypts[rest] + h, norm))
        out[rest] = np.minimum(out[rest], d)
    return out


def translate_theorem(spec: TranslateCoverSpec, rng=0, n_verify: int = 10000,
                      precheck: int = 10000, norm: AmbientNorm = L2) -> TranslateResult:
    """Finite-codimensional Y and finite ``H ⊂ A`` with ``B_Y ⊂ (A - H) + ε B``.

    Follows the construction: F = span(O), δ with ``(1+δ)A ⊂ A + (ε/3)B``,
    Y the kernel of the gauge-controlled projection onto F, H an (ε/3)-net of
    ``F ∩ A``. When 0 is not interior, A is first recentred at its deep point
    and H is shifted back at the end.
    """
    A, O, eps = spec.A, spec.O, float(spec.eps)
    if not eps > 0:
        raise PreconditionError("eps must be > 0")
    master = int(make_rng(rng).integers(2 ** 62))
    bad = check_translate_cover(A, O, precheck, derive_rng(master, 0))
    if bad is not None:
        raise PreconditionError(f"sampled B ⊂ A + O fails at {bad}")
    N = A.dim
    shift = np.zeros(N)
    if not A.interior_radius_at(shift, norm) > 0:
        shift = A.deep_point(norm)
        A = Translate(A, -shift)
        O = O + shift
    nz = O[np.linalg.norm(O, axis=1) > 1e-12]
    F = Subspace.span(nz) if nz.shape[0] else Subspace.zero(N)
    if F.dim > 3:
        raise PreconditionError("span(O) must have dimension <= 3")
    exp = expansion_delta(A, eps / 3, derive_rng(master, 1), 1000, norm)
    delta = exp.delta_prime
    proj = build_projection(A, F, delta, derive_rng(master, 2))
    Y = proj.Y
    Ysamp = sample_subspace_ball(Y, n_verify, derive_rng(master, 3)) if Y.dim else np.zeros((n_verify, N))
    for level in range(2):
        # second pass: one refinement of the net of C
        Hs = _translate_net(A, F, eps / (3.0 * 2 ** level), norm)
        d = _min_translate_dist(A, Ysamp, Hs, norm)
        worst = float(d.max())
        if worst <= eps + DEFAULT.audit_slack:
            return TranslateResult(Y, Hs + shift, F, delta, shift, proj, worst, n_verify, True)
    raise VerificationError(f"B_Y ⊄ (A - H) + εB on fresh samples (max dist {worst:.6g})",
                            witness=Ysamp[int(np.argmax(d))])


def _translate_net(A, F, radius, norm):
    if F.dim == 0:
        return np.zeros((1, A.dim))
    step = radius / (2.0 * math.sqrt(F.dim))
    G = _grid_net(A, F, step)
    return farthest_point_net(G, radius - 0.5 * step * math.sqrt(F.dim), norm)


# ---------------------------------------------------------------------------
# balanced sets

@dataclass
class HalfRadiusReport:
    lam: float
    eps: float
    r: float
    validated: bool
    largest_validated: float
    translate: TranslateResult


def half_radius_check(A: ConvexBody, O, lam: float, rng=0, n_verify: int = 10000,
                      grid: Sequence[float] = tuple(np.round(np.arange(0.05, 1.0001, 0.05), 2)),
                      balance_samples: int = 5000) -> HalfRadiusReport:
    """``λ B_Y ⊂ A`` for balanced A with sampled ``B ⊂ A + O`` and ``λ < 1/2``.

    With ``rB ⊂ A`` and ``ε = r (1/λ - 2)``: ``B_Y ⊂ (A - H) + εB ⊂ 2A + (ε/r)A
    = A/λ``. The inclusion is then audited directly; the report also gives the
    largest grid value of λ that passes the same audit.
    """
    if not 0 < lam < 0.5:
        raise PreconditionError("need 0 < lam < 1/2")
    master = int(make_rng(rng).integers(2 ** 62))
    S = sample_uniform(A, balance_samples, derive_rng(master, 0))
    if not np.all(np.atleast_1d(A.violation(-S)) <= DEFAULT.membership):
        raise PreconditionError("A is not balanced (sampled)")
    r = A.interior_radius_at(np.zeros(A.dim))
    if not r > 0:
        raise PreconditionError("0 must be interior to A")
    eps = r * (1.0 / lam - 2.0)
    tr = translate_theorem(TranslateCoverSpec(A, O, eps), derive_rng(master, 1), n_verify)
    Y = tr.Y
    Ys = sample_subspace_ball(Y, n_verify, derive_rng(master, 2)) if Y.dim else np.zeros((1, A.dim))

    def audit(t):
        return bool(np.all(np.atleast_1d(A.violation(t * Ys)) <= DEFAULT.membership))

    ok = audit(lam)
    best = max([t for t in grid if audit(t)], default=0.0)
    if ok:
        best = max(best, lam)
    return HalfRadiusReport(lam, eps, r, ok, float(best), tr)


# ---------------------------------------------------------------------------
# Hilbert space

@dataclass
class HilbertCodimReport:
    delta: float
    cut: int
    tail: float
    Y: Subspace
    max_dist: float
    passed: bool
    cover_ok: Optional[bool]


def uniform_convexity_delta(eps: float) -> float:
    """δ with: x, y ∈ B and ``|(x+y)/2| >= 1 - δ`` imply ``|x - y| <= ε`` (Euclidean)."""
    return eps * eps / 8.0


def uniform_convexity_check(eps: float, trials: int = 10000, rng=0, grid: int = 65) -> dict:
    """Random segment test of :func:`uniform_convexity_delta`.

    Pairs are drawn near the sphere so that the hypothesis is often met.
    """
    delta = uniform_convexity_delta(eps)
    rng = make_rng(rng)
    N = 3
    X = random_unit_vectors(L2, N, trials, rng)
    spread = rng.random(trials)[:, None] * 2.0 * eps
    Y = X + spread * rng.standard_normal((trials, N))
    Y /= np.maximum(1.0, np.linalg.norm(Y, axis=1))[:, None]
    X *= (1.0 - delta * rng.random(trials))[:, None]
    t = np.linspace(0.0, 1.0, grid)
    seg = t[None, :, None] * X[:, None, :] + (1 - t)[None, :, None] * Y[:, None, :]
    mins = np.linalg.norm(seg, axis=2).min(axis=1)
    hyp = mins >= 1.0 - delta
    d = np.linalg.norm(X - Y, axis=1)
    viol = hyp & (d > eps + 1e-6)
    return {"delta": delta, "tested": int(hyp.sum()), "violations": int(viol.sum()),
            "max_gap": float(d[hyp].max()) if hyp.any() else 0.0}


def _box_extents(K: Box):
    return np.maximum(np.abs(K.lo), np.abs(K.hi))


def hilbert_codim(A: ConvexBody, K: Box, eps: float, rng=0, n_verify: int = 10000,
                  contain_samples: int = 10000) -> HilbertCodimReport:
    """Coordinate-tail subspace Y with ``S_Y ⊂ A + εB`` for ``A ⊂ B ⊂ A + K``.

    ``δ = ε²/8``; the cut n is the smallest with ``sum_{m > n} extent_m < δ``
    (an ℓ1 tail, which bounds the Euclidean size of the discarded part of K).
    """
    if not eps > 0:
        raise PreconditionError("eps must be > 0")
    N = A.dim
    master = int(make_rng(rng).integers(2 ** 62))
    # boundary points x / Λ(x) are the extreme candidates for leaving B
    D = np.vstack([np.eye(N), -np.eye(N), derive_rng(master, 0).standard_normal((contain_samples, N))])
    S = D / np.atleast_1d(A.gauge(D))[:, None]
    if np.any(np.linalg.norm(S, axis=1) > 1.0 + DEFAULT.membership):
        raise PreconditionError("A ⊄ B (sampled)")
    delta = uniform_convexity_delta(eps)
    ext = _box_extents(K)
    tails = np.concatenate([np.cumsum(ext[::-1])[::-1], [0.0]])  # tails[n] = sum_{m >= n} ext_m (0-based)
    cut = int(np.argmax(tails < delta))
    if cut >= N:
        raise PreconditionError("K's tail does not drop below δ inside the truncation")
    Y = Subspace.coordinates(N, range(cut, N))
    U = unit_sphere_samples(Y, n_verify, derive_rng(master, 1))
    U = np.vstack([U, Y.basis.T])
    d = np.atleast_1d(A.dist(U))
    worst = float(d.max())
    cover_ok = None
    if isinstance(A, QuadLin) and not np.any(A.a):
        Xb = sample_ball(L2, N, contain_samples, derive_rng(master, 2))
        cover_ok = bool(np.all(clamp_residual(A, K, Xb) <= A.r + 1e-9))
    return HilbertCodimReport(delta, cut, float(tails[cut]), Y, worst,
                              worst <= eps + DEFAULT.audit_slack, cover_ok)


def clamp_residual(A: QuadLin, K: Box, X) -> np.ndarray:
    """``min_{k in K} sum q (x - k)^2`` via the separable clamp ``k = clip(x)``."""
    Kx = np.clip(X, K.lo, K.hi)
    return (X - Kx) ** 2 @ A.q


# ---------------------------------------------------------------------------
# the two worked examples

def counterexample_bodies(N: int):
    """``A = {sum (1 - 2^-n)^-2 x_n^2 <= 1}`` and ``K = {|x_n| <= 2^-n}``, n = 1..N."""
    n = np.arange(1, N + 1)
    A = QuadLin((1.0 - 2.0 ** -n) ** -2, np.zeros(N), 1.0)
    K = Box(-(2.0 ** -n), 2.0 ** -n)
    return A, K


@dataclass
class CounterexampleReport:
    N: int
    samples: int
    cover_ok: bool
    max_residual: float
    axis_dist: np.ndarray
    tail_dist: np.ndarray
    cuts: dict
    escapes: bool


def counterexample_check(N: int, eps_list: Sequence[float] = (0.2, 0.1, 0.05), samples: int = 100000,
                         rng=0) -> CounterexampleReport:
    """(i) ``B ⊂ A + K`` by the exact clamp oracle; (ii) ``dist(A, e_n) = 2^-n``
    while ``e_n ∉ A``, so no coordinate tail ball fits in A but each ε has a
    tail cut m(ε) with ``S_Y ⊂ A + εB``."""
    if N < 4:
        raise PreconditionError("N must be >= 4")
    A, K = counterexample_bodies(N)
    X = sample_ball(L2, N, samples, make_rng(rng))
    res = clamp_residual(A, K, X)
    cover_ok = bool(np.all(res <= 1.0 + 1e-9))
    E = np.eye(N)
    axis = np.atleast_1d(A.dist(E))
    tail = np.array([axis[m:].max() for m in range(N)])  # Y = coordinates m+1..N
    escapes = bool(np.all(np.atleast_1d(A.violation(E)) > 0))
    cuts = {}
    for e in eps_list:
        ok = np.flatnonzero(tail <= e)
        cuts[float(e)] = int(ok[0]) if ok.size else None
    return CounterexampleReport(N, samples, cover_ok, float(res.max()), axis, tail, cuts, escapes)


def random_polytope(N: int, rng=0, facets: Optional[int] = None, offsets=(0.5, 1.5)) -> Polytope:
    """Polytope with Haar-random facet normals and uniform offsets around 0,
    redrawn until bounded."""
    rng = make_rng(rng)
    m = facets or 3 * N
    for _ in range(100):
        Am = random_unit_vectors(L2, N, m, rng)
        b = rng.uniform(*offsets, size=m)
        P = Polytope(Am, b)
        lo, hi = P.bounding_box
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            return P
    raise ConvergenceError("could not draw a bounded polytope", best=None)


def hexagon(circumradius: float = 1.0 / math.sqrt(3.0)):
    """Regular hexagon with a vertex on the positive x-axis, and its vertices."""
    A = Polytope.regular_polygon(6, circumradius, phase=0.0)
    t = 2.0 * np.pi * np.arange(6) / 6
    H = circumradius * np.column_stack([np.cos(t), np.sin(t)])
    return A, H


@dataclass
class HexagonReport:
    samples: int
    mesh_points: int
    uncovered: np.ndarray
    worst_margin: float

    @property
    def passed(self) -> bool:
        return self.uncovered.shape[0] == 0


def hexagon_check(samples: int = 100000, mesh: int = 512, rng=0, tol: float = 1e-9) -> HexagonReport:
    """``B_{R^2} ⊂ A - H``: every b has a vertex h with ``b + h ∈ A``."""
    A, H = hexagon()
    X = np.vstack([sample_ball(L2, 2, samples, make_rng(rng)), sphere_mesh(2, mesh)])
    best = np.min(np.column_stack([np.atleast_1d(A.violation(X + h)) for h in H]), axis=1)
    return HexagonReport(samples, mesh, X[best > tol], float(best.max()))
