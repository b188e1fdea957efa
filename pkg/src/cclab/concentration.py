"""Monte Carlo experiments on near-constant functions over random subspheres.

A Lipschitz function on a high-dimensional sphere is almost constant on
the unit sphere of some subspace of moderate dimension. The routines here
search random (Haar) subspaces for that flatness, use it to pick a covering
set that almost contains a whole subsphere, and repeat the argument for
general norms through almost-Euclidean sections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .bodies import ConvexBody
from .errors import PreconditionError, SearchExhausted, VerificationError
from .spaces import (L2, AmbientNorm, Subspace, derive_rng, make_rng, random_frame,
                     random_unit_vectors, unit_sphere_samples)


@dataclass
class LipschitzFn:
    """Vectorized ``f(X) -> (m,)`` with a declared Euclidean Lipschitz constant."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    tau: float
    name: str = "f"

    def __call__(self, X):
        return np.asarray(self.evaluator(np.atleast_2d(X)), dtype=float)


def validate_lipschitz(f: LipschitzFn, N: int, pairs: int = 10000, rng=0,
                       within: Optional[np.ndarray] = None) -> float:
    """Largest sampled quotient ``|f(x)-f(y)| / |x-y|``; raises if it exceeds ``tau``.

    Half the pairs are independent sphere points, half are close pairs
    (perturbations of size ~1e-3), since Lipschitz violations are local.
    """
    rng = make_rng(rng)
    Wb = np.eye(N) if within is None else within
    d = Wb.shape[1]
    h = pairs // 2
    X = random_unit_vectors(L2, d, pairs, rng)
    Y = np.vstack([random_unit_vectors(L2, d, h, rng),
                   X[h:] + 1e-3 * rng.standard_normal((pairs - h, d))])
    X, Y = X @ Wb.T, Y @ Wb.T
    dist = np.linalg.norm(X - Y, axis=1)
    keep = dist > 0
    q = np.abs(f(X) - f(Y))[keep] / dist[keep]
    worst = float(q.max()) if q.size else 0.0
    if worst > f.tau * (1.0 + 1e-6):
        raise PreconditionError(f"{f.name}: sampled Lipschitz quotient {worst:.6g} exceeds tau={f.tau}")
    return worst


def norm_function(p: AmbientNorm) -> LipschitzFn:
    """``x -> ||x||_p``, Lipschitz constant ``max ||x||_p / ||x||_2`` bounded by 1 for p = Linf, L2."""
    p = AmbientNorm.parse(p)
    if p is AmbientNorm.L1:
        raise PreconditionError("the ℓ1 norm has a dimension-dependent Lipschitz constant; build it explicitly")
    return LipschitzFn(lambda X: p(X), 1.0, f"norm_{p.value}")


def distance_function(body: ConvexBody, norm: AmbientNorm = L2, scale: float = 1.0,
                      tau: Optional[float] = None) -> LipschitzFn:
    """``x -> dist_norm(body, scale*x)``; 1-Lipschitz for L2/Linf at scale 1."""
    norm = AmbientNorm.parse(norm)
    if tau is None:
        if norm is AmbientNorm.L1:
            raise PreconditionError("give tau explicitly for ℓ1 distances")
        tau = scale
    return LipschitzFn(lambda X: body.dist(scale * X, norm), float(tau), "dist")


# ---------------------------------------------------------------------------
# flat subspaces

@dataclass
class Oscillation:
    min: float
    max: float
    lambda0: float

    @property
    def oscillation(self) -> float:
        return self.max - self.min


def oscillation_on_subspace(f: LipschitzFn, F, m_samples: int, rng) -> Oscillation:
    """Extremes of ``f`` on ``m_samples`` unit vectors of F plus the ±basis."""
    B = F.basis if isinstance(F, Subspace) else np.asarray(F)
    n = B.shape[1]
    if m_samples < 2 * n:
        raise PreconditionError("m_samples must be >= 2 dim(F)")
    X = np.vstack([B.T, -B.T, unit_sphere_samples(B, m_samples, make_rng(rng))])
    v = f(X)
    lo, hi = float(v.min()), float(v.max())
    return Oscillation(lo, hi, 0.5 * (lo + hi))


@dataclass
class FlatSubspaceResult:
    subspace: Subspace
    lambda0: float
    oscillation: float
    trials_used: int
    successes: int = 0
    found: bool = True

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials_used if self.trials_used else 0.0


def find_flat_subspace(f: LipschitzFn, N: int, n: int, eps: float, trials: int, rng,
                       m_samples: Optional[int] = None, within: Optional[np.ndarray] = None,
                       stop_at_first: bool = True) -> FlatSubspaceResult:
    """Random n-subspaces until the sampled oscillation of f is ``<= 2 eps``.

    With ``stop_at_first=False`` all ``trials`` are drawn and the success
    count is the experiment's datum. On exhaustion the best subspace seen is
    returned with ``found=False``. ``within`` restricts the draws to the
    span of an orthonormal ``N x d`` matrix.
    """
    if not 0 < eps < f.tau / 2:
        raise PreconditionError(f"need 0 < eps < tau/2 = {f.tau / 2}")
    Wb = np.eye(N) if within is None else np.asarray(within)
    d = Wb.shape[1]
    if not 1 <= n <= d:
        raise PreconditionError(f"need 1 <= n <= {d}")
    rng = make_rng(rng)
    m = 512 * n if m_samples is None else m_samples
    best, best_osc, first = None, math.inf, None
    successes = 0
    for t in range(1, trials + 1):
        B = Wb @ random_frame(d, n, rng)
        o = oscillation_on_subspace(f, B, m, rng)
        if o.oscillation < best_osc:
            best, best_osc = (B, o), o.oscillation
        if o.oscillation <= 2 * eps:
            successes += 1
            if first is None:
                first = (B, o, t)
            if stop_at_first:
                break
    if first is not None:
        B, o, t = first
        used = t if stop_at_first else trials
        return FlatSubspaceResult(Subspace(B), o.lambda0, o.oscillation, used, successes, True)
    B, o = best
    return FlatSubspaceResult(Subspace(B), o.lambda0, o.oscillation, trials, 0, False)


@dataclass
class TrendRow:
    N: int
    n: int
    epsilon: float
    trials: int
    successes: float
    best_oscillation: float
    seed: int


def concentration_trend(Ns: Sequence[int], n: int = 2, eps: float = 0.25, trials: int = 100,
                        reps: int = 20, seed: int = 0, p: AmbientNorm = AmbientNorm.Linf,
                        m_samples: Optional[int] = None) -> List[TrendRow]:
    """Median success counts of :func:`find_flat_subspace` for f = ||.||_p over N."""
    f = norm_function(p)
    rows = []
    for N in Ns:
        counts, best = [], math.inf
        for r in range(reps):
            res = find_flat_subspace(f, N, n, eps, trials, derive_rng(seed, N * 1000 + r),
                                     m_samples, stop_at_first=False)
            counts.append(res.successes)
            best = min(best, res.oscillation)
        rows.append(TrendRow(N, n, eps, trials, float(np.median(counts)), best, seed))
    return rows


# ---------------------------------------------------------------------------
# covering versions

@dataclass
class FlatCoverResult:
    index: int
    subspace: Subspace
    lambda0s: List[float]
    max_fresh: float
    stage_dims: List[int] = field(default_factory=list)


def sphere_cover_check(pieces: Sequence[ConvexBody], N: int, samples: int, rng,
                       tol: float = 1e-9) -> Optional[np.ndarray]:
    """An uncovered sphere sample, or None."""
    X = random_unit_vectors(L2, N, samples, make_rng(rng))
    V = np.column_stack([np.atleast_1d(p.violation(X)) for p in pieces]).min(axis=1)
    bad = V > tol
    return X[int(np.argmax(bad))] if bad.any() else None


def _fresh_max(fs, index, B, samples, rng):
    U = unit_sphere_samples(B, samples, rng)
    return float(np.max(fs[index](np.vstack([B.T, -B.T, U]))))


def _stage(f, N, n, eta, c, trials, rng, within, m_samples):
    """One dichotomy on the distance-type function ``f``.

    Returns (near, result): ``near`` means ``f <= c + 2 eta`` on the found
    subsphere, otherwise ``f > c`` there.
    """
    res = find_flat_subspace(f, N, n, eta, trials, rng, m_samples, within)
    if not res.found:
        return None, res
    return res.lambda0 <= c + eta, res


def _flat_cover(fs, N, n, eta, c, rng, trials, dims, m_samples, within=None):
    k = len(fs)
    rng = make_rng(rng)
    Wb = np.eye(N) if within is None else within
    if k == 1:
        return 0, Wb @ random_frame(Wb.shape[1], n, rng), [], []
    lambdas, used_dims = [], []
    current = Wb
    for stage in range(k - 1):
        target = dims[stage]
        d = target
        while True:
            near, res = _stage(fs[stage], N, d, eta, c, trials, rng, current, m_samples)
            if near is not None:
                break
            if d == n:
                raise SearchExhausted(f"stage {stage + 1}: no flat {d}-subspace in {trials} trials",
                                      best=res)
            d = max(n, d // 2)
        lambdas.append(res.lambda0)
        used_dims.append(d)
        B = res.subspace.basis
        if near:
            return stage, B @ random_frame(d, n, rng), lambdas, used_dims
        current = B
    # every earlier piece was excluded; the last piece holds the subsphere
    return k - 1, current @ random_frame(current.shape[1], n, rng), lambdas, used_dims


def _stage_dims(N, n, k, dims):
    if dims is not None:
        dims = list(dims)
        if len(dims) != k - 1 or dims[-1] != n:
            raise PreconditionError("dims needs k-1 entries ending with n")
        return dims
    if k <= 1:
        return []
    out = []
    for i in range(1, k):
        t = i / (k - 1)
        out.append(max(n, int(round(N ** (1 - t) * n ** t))))
    out[-1] = n
    return out


def two_set_flat(A1: ConvexBody, A2: ConvexBody, N: int, n: int, eps: float, trials: int = 200,
                 rng=0, verify_samples: int = 1000, check_samples: int = 5000,
                 m_samples: Optional[int] = None) -> FlatCoverResult:
    """Index ``i`` and n-subspace F with ``F ∩ S ⊂ A_i + eps B`` for a two-set sphere cover."""
    return multi_set_flat([A1, A2], N, n, eps, rng, trials, verify_samples, check_samples,
                          dims=[n], m_samples=m_samples)


def multi_set_flat(pieces: Sequence[ConvexBody], N: int, n: int, eps: float, rng=0,
                   trials: int = 200, verify_samples: int = 1000, check_samples: int = 5000,
                   dims: Optional[Sequence[int]] = None,
                   m_samples: Optional[int] = None) -> FlatCoverResult:
    """Recursive dichotomy: piece 1 against the union of the rest, inside the
    subspace found at the previous stage.

    Each stage finds a subsphere on which ``dist(A_stage, .)`` oscillates by
    at most ``eps``. A midpoint ``<= eps/2`` selects the piece; otherwise the
    distance is positive, so the subsphere lies in the union of the remaining
    pieces and the next stage works inside it. Stage dimensions shrink
    geometrically from N to n and are halved further when a stage fails.
    The answer is audited on fresh samples: ``dist <= eps + 1e-6``.
    """
    pieces = list(pieces)
    k = len(pieces)
    if k < 1:
        raise PreconditionError("need at least one piece")
    master = int(make_rng(rng).integers(2 ** 62))
    bad = sphere_cover_check(pieces, N, check_samples, derive_rng(master, 0))
    if bad is not None:
        raise PreconditionError("pieces do not cover the sphere (sampled)")
    fs = [distance_function(p) for p in pieces]
    validate_lipschitz(fs[0], N, 2000, derive_rng(master, 1))
    idx, B, lambdas, used = _flat_cover(fs, N, n, eps / 2, 0.0, derive_rng(master, 2), trials,
                                        _stage_dims(N, n, k, dims), m_samples)
    worst = _fresh_max(fs, idx, B, verify_samples, derive_rng(master, 3))
    if worst > eps + 1e-6:
        raise VerificationError(f"fresh samples reach distance {worst:.6g} > eps", witness=B)
    return FlatCoverResult(idx, Subspace(B), lambdas, worst, used)


# ---------------------------------------------------------------------------
# general norms through almost-Euclidean sections

@dataclass
class SectionReport:
    best_ratio: float
    subspace: Subspace
    ratios: List[float]
    min_norm: float


def _section_ratio(p, B, dirs, rng):
    U = np.vstack([B.T, -B.T])
    if B.shape[1] > 1:
        # a 1-dimensional section has only the two points ±u on its sphere
        U = np.vstack([U, unit_sphere_samples(B, dirs, rng)])
    v = p(U)
    return float(v.max() / v.min()), float(v.min())


def euclidean_section_quality(p: AmbientNorm, N: int, n: int, trials: int, rng,
                              dirs: int = 1000, target: Optional[float] = None) -> SectionReport:
    """Best ``max ||u||_p / min ||u||_p`` over the Euclidean sphere of random n-sections."""
    p = AmbientNorm.parse(p)
    if not 1 <= n <= N:
        raise PreconditionError("need 1 <= n <= N")
    rng = make_rng(rng)
    best = (math.inf, None, 0.0)
    ratios = []
    for _ in range(trials):
        B = random_frame(N, n, rng)
        r, mn = _section_ratio(p, B, dirs, rng)
        ratios.append(r)
        if r < best[0]:
            best = (r, B, mn)
        if target is not None and r <= target:
            break
    return SectionReport(best[0], Subspace(best[1]), ratios, best[2])


@dataclass
class SphereCoverResult:
    index: int
    subspace: Subspace
    section: SectionReport
    scale: float
    max_fresh: float


def sphere_cover_ball_experiment(p: AmbientNorm, pieces: Sequence[ConvexBody], N: int, n: int,
                                 eps: float, rng=0, section_trials: int = 200,
                                 section_dim: Optional[int] = None, trials: int = 400,
                                 verify_samples: int = 1000, check_samples: int = 5000,
                                 m_samples: Optional[int] = None) -> SphereCoverResult:
    """Index ``i`` and n-subspace F with ``F ∩ S_X ⊂ A_i + eps B_X`` in the p-norm.

    A random section E with distortion ``<= 1 + eps/3`` is rescaled so its
    Euclidean sphere sits between ``S_X`` and ``(1+eps/3) S_X``; the pieces
    then cover that sphere up to ``c = ratio - 1``, and the flat-subspace
    recursion runs inside E on ``x -> dist_p(A_i, s x)`` with threshold c and
    flatness ``eps/6``. Fresh p-sphere samples of F audit the result.
    """
    p = AmbientNorm.parse(p)
    pieces = list(pieces)
    k = len(pieces)
    master = int(make_rng(rng).integers(2 ** 62))
    X = random_unit_vectors(p, N, check_samples, derive_rng(master, 0))
    V = np.column_stack([np.atleast_1d(q.violation(X)) for q in pieces]).min(axis=1)
    if np.any(V > 1e-9):
        raise PreconditionError("pieces do not cover the p-sphere (sampled)")
    if p is L2:
        sec = SectionReport(1.0, Subspace.full(N), [1.0], 1.0)
    else:
        d = section_dim if section_dim is not None else min(N, n + 1)
        sec = euclidean_section_quality(p, N, d, section_trials, derive_rng(master, 1),
                                        target=1.0 + eps / 3)
        if sec.best_ratio > 1.0 + eps / 3:
            raise SearchExhausted(f"no section with ratio <= {1 + eps / 3:.6g} "
                                  f"(best {sec.best_ratio:.6g})", best=sec)
    E = sec.subspace.basis
    s = 1.0 / sec.min_norm
    c = sec.best_ratio - 1.0
    eta = eps / 6
    tau = s * (1.0 if p is not AmbientNorm.L1 else math.sqrt(N))
    fs = [distance_function(q, p, s, tau) for q in pieces]
    idx, B, _, _ = _flat_cover(fs, N, n, eta, c, derive_rng(master, 2), trials,
                               _stage_dims(E.shape[1], n, k, None), m_samples, within=E)
    U = unit_sphere_samples(B, verify_samples, derive_rng(master, 3), p)
    U = np.vstack([U, -U[:1]])
    worst = float(np.max(pieces[idx].dist(U, p)))
    if worst > eps + 1e-6:
        raise VerificationError(f"fresh samples reach p-distance {worst:.6g} > eps", witness=U)
    return SphereCoverResult(idx, Subspace(B), sec, s, worst)


# ---------------------------------------------------------------------------
# test covers of the sphere

def hemisphere_cover(N: int, axis: int = 0):
    from .bodies import Polytope
    e = np.zeros(N)
    e[axis] = 1.0
    return [Polytope(e[None, :], [0.0]), Polytope(-e[None, :], [0.0])]


def sector_cover(N: int, k: int = 3, phase: float = 0.0, plane=(0, 1)):
    """``k`` closed angular sectors of the coordinate plane times the rest."""
    from .bodies import Polytope
    i, j = plane
    pieces = []
    for t in range(k):
        a0 = phase + 2 * np.pi * t / k
        a1 = a0 + 2 * np.pi / k
        rows = []
        # inside: left of the ray at a0 and right of the ray at a1
        for ang, sgn in ((a0, 1.0), (a1, -1.0)):
            r = np.zeros(N)
            r[i], r[j] = sgn * np.sin(ang), -sgn * np.cos(ang)
            rows.append(r)
        pieces.append(Polytope(np.array(rows), np.zeros(2)))
    return pieces
