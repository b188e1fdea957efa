"""Covers of unit balls by closed convex pieces.

Builders for the Hilbert-space cover by 2k congruent pieces, sampled cover
verification (with an algebraic certificate for the Hilbert family),
interiority filtering, expansion constants, and the two combinatorial
searches: an antipodal pair inside one piece, and a sub-cube cylinder
inside one piece of a cube cover.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .bodies import (Ball, Box, ConvexBody, Intersection, Polytope, QuadLin,
                     body_from_dict, body_to_dict, sample_uniform)
from .errors import PreconditionError, SearchExhausted, VerificationError
from .spaces import L2, AmbientNorm, Subspace, derive_rng, make_rng, random_unit_vectors, sphere_mesh
from .tolerances import DEFAULT


@dataclass(frozen=True)
class HilbertCoverSpec:
    k: int
    N: int

    def __post_init__(self):
        if int(self.k) < 1:
            raise PreconditionError("k must be >= 1")
        if int(self.N) < 2:
            raise PreconditionError("need N >= 2")

    @property
    def complete(self) -> bool:
        """True when every residue class meets ``{1, ..., N-1}`` (N >= 2k + 1)."""
        return self.N >= 2 * self.k + 1

    def residue_class(self, j: int) -> np.ndarray:
        """Coordinates ``i >= 1`` with ``i = j (mod 2k)``."""
        i = np.arange(1, self.N)
        return i[(i - j) % (2 * self.k) == 0]


@dataclass(frozen=True, eq=False)
class Cover:
    ambient: ConvexBody
    pieces: tuple
    hilbert: Optional[HilbertCoverSpec] = None

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise PreconditionError("a cover needs at least one piece")
        if any(p.dim != self.ambient.dim for p in pieces):
            raise PreconditionError("pieces and ambient disagree in dimension")
        object.__setattr__(self, "pieces", pieces)

    @property
    def dim(self) -> int:
        return self.ambient.dim

    def __len__(self):
        return len(self.pieces)

    def violations(self, X) -> np.ndarray:
        """``(m, k)`` matrix of piece violations."""
        X = np.atleast_2d(X)
        return np.column_stack([np.atleast_1d(p.violation(X)) for p in self.pieces])

    def to_dict(self) -> dict:
        d = {"ambient": body_to_dict(self.ambient),
             "pieces": [body_to_dict(p) for p in self.pieces]}
        if self.hilbert is not None:
            d["hilbert"] = {"k": self.hilbert.k, "N": self.hilbert.N}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Cover":
        h = d.get("hilbert")
        return cls(body_from_dict(d["ambient"]),
                   tuple(body_from_dict(p) for p in d["pieces"]),
                   HilbertCoverSpec(**h) if h else None)


@dataclass
class CoverReport:
    total_samples: int
    uncovered: np.ndarray
    max_violation: float
    certificate: Optional[str] = None
    certificate_ok: Optional[bool] = None
    min_certificate: Optional[float] = None

    @property
    def covered(self) -> bool:
        return self.uncovered.shape[0] == 0 and self.certificate_ok is not False


# ---------------------------------------------------------------------------
# builders

def build_hilbert_cover(spec: HilbertCoverSpec) -> Cover:
    """Pieces ``A_j = B ∩ {k sum_{i in class j} x_i^2 + (-1)^j x_0 <= 1/2}``, j = 1..2k."""
    k, N = spec.k, spec.N
    B = Ball.unit(N)
    pieces = []
    for j in range(1, 2 * k + 1):
        q = np.zeros(N)
        q[spec.residue_class(j)] = k
        a = np.zeros(N)
        a[0] = (-1.0) ** j
        pieces.append(Intersection((B, QuadLin(q, a, 0.5))))
    return Cover(B, tuple(pieces), spec)


def hilbert_search_space(spec: HilbertCoverSpec, j: int) -> Subspace:
    """``span(e_0, e_i : i in class j)``, the coordinates the piece ``A_j`` constrains."""
    return Subspace.coordinates(spec.N, [0] + list(spec.residue_class(j)))


def rk_bound(k: int) -> float:
    """Upper bound on the radius of 2-dimensional balls in a piece of the k-th cover."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    t = 1.0 - 1.0 / k
    return float(np.sqrt(t / (2 * k) + np.sqrt(t * t + 3.0) / (2 * k)))


def random_cell_cover(ambient: ConvexBody, k: int, rng, offset_scale: float = 0.3) -> Cover:
    """Cover of ``ambient`` by the ``k`` cells of ``argmax_j (w_j . x + b_j)``.

    Each cell is polyhedral; for a polyhedral ambient the pieces are
    :class:`Polytope` objects, otherwise ``ambient ∩ cell``.
    """
    rng = make_rng(rng)
    N = ambient.dim
    if k == 1:
        return Cover(ambient, (ambient,))
    W = rng.standard_normal((k, N))
    b = offset_scale * rng.standard_normal(k)
    H = ambient.halfspaces()
    pieces = []
    for j in range(k):
        others = [i for i in range(k) if i != j]
        A = W[others] - W[j]
        c = b[j] - b[others]
        if H is not None:
            pieces.append(Polytope(np.vstack([H[0], A]), np.concatenate([H[1], c])))
        else:
            pieces.append(Intersection((ambient, Polytope(A, c))))
    return Cover(ambient, tuple(pieces))


# ---------------------------------------------------------------------------
# verification

def hilbert_certificate(spec: HilbertCoverSpec, X) -> Tuple[np.ndarray, np.ndarray]:
    """Sum of the 2k slacks and its closed form ``k (1 - sum_{i>=1} x_i^2)``."""
    X = np.atleast_2d(X)
    k = spec.k
    total = np.zeros(X.shape[0])
    for j in range(1, 2 * k + 1):
        idx = spec.residue_class(j)
        total += 0.5 - k * np.sum(X[:, idx] ** 2, axis=1) - (-1.0) ** j * X[:, 0]
    closed = k * (1.0 - np.sum(X[:, 1:] ** 2, axis=1))
    return total, closed


def _verify_chunk(cover, m, rng, tol):
    X = sample_uniform(cover.ambient, m, rng)
    best = cover.violations(X).min(axis=1)
    cert = None
    if cover.hilbert is not None:
        total, closed = hilbert_certificate(cover.hilbert, X)
        agree = np.abs(total - closed) <= 1e-9 * max(1.0, cover.hilbert.k)
        cert = (float(np.min(total)), bool(np.all(agree)))
    return X[best > tol], float(best.max()), cert


def verify_cover(cover: Cover, n_samples: int, rng, tol: float = DEFAULT.membership,
                 workers: int = 1, chunk: int = 20000) -> CoverReport:
    """Sample the ambient body and test each point against the pieces.

    Samples are drawn in fixed-size chunks, each from its own derived stream,
    so the report does not depend on ``workers``.
    """
    if n_samples < 1:
        raise PreconditionError("n_samples must be >= 1")
    master = int(make_rng(rng).integers(2 ** 62))
    sizes = [chunk] * (n_samples // chunk)
    if n_samples % chunk:
        sizes.append(n_samples % chunk)
    jobs = [(s, derive_rng(master, i)) for i, s in enumerate(sizes)]
    run = lambda job: _verify_chunk(cover, job[0], job[1], tol)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    uncovered = np.vstack([p[0] for p in parts])
    max_violation = max(p[1] for p in parts)
    report = CoverReport(n_samples, uncovered, max_violation)
    if cover.hilbert is not None:
        min_cert = min(p[2][0] for p in parts)
        agree = all(p[2][1] for p in parts)
        report.certificate = "algebraic"
        report.min_certificate = min_cert
        report.certificate_ok = bool(agree and min_cert >= -tol)
    return report


def filter_interior(cover: Cover, tol: float = 1e-9, n_samples: int = 10000, rng=0,
                    norm: AmbientNorm = L2) -> Cover:
    """Drop pieces whose largest inscribed ball has radius ``<= tol``.

    The reduced family is re-verified on the ambient samples; failure raises
    :class:`VerificationError` carrying an uncovered point.
    """
    keep = []
    for p in cover.pieces:
        c = p.deep_point(norm)
        if p.interior_radius_at(c, norm) > tol:
            keep.append(p)
    if not keep:
        raise VerificationError("no piece has nonempty interior", witness=None)
    reduced = Cover(cover.ambient, tuple(keep),
                    cover.hilbert if len(keep) == len(cover.pieces) else None)
    rep = verify_cover(reduced, n_samples, rng, DEFAULT.membership)
    if rep.uncovered.shape[0]:
        raise VerificationError("filtered family no longer covers", witness=rep.uncovered[0])
    return reduced


@dataclass
class ExpansionResult:
    delta: float
    delta_prime: float
    r: float
    R: float
    max_gauge: float
    max_excess_dist: Optional[float]
    validated: bool


def expansion_delta(body: ConvexBody, eps: float, rng=0, n_check: int = 1000,
                    norm: AmbientNorm = L2) -> ExpansionResult:
    """Constants for ``A + δB ⊂ (1+ε)A`` and ``(1+δ')A ⊂ A + εB``.

    ``δ = ε r`` with ``r`` the interior radius at 0; ``δ' = ε / R`` with ``R``
    the largest sampled norm of a boundary point. Both inclusions are checked
    on fresh samples.
    """
    if not eps > 0:
        raise PreconditionError("eps must be > 0")
    r = body.interior_radius_at(np.zeros(body.dim), norm)
    if not r > 0:
        raise PreconditionError("0 must be an interior point of the body")
    rng = make_rng(rng)
    delta = eps * r
    # R: sampled sup of ||x|| over the boundary
    D = random_unit_vectors(norm, body.dim, max(n_check, 4 * body.dim), rng)
    D = np.vstack([D, np.eye(body.dim), -np.eye(body.dim)])
    bd = D / np.atleast_1d(body.gauge(D))[:, None]
    R = float(np.max(norm(bd)))
    delta_prime = eps / R
    A = sample_uniform(body, n_check, rng)
    U = random_unit_vectors(norm, body.dim, n_check, rng)
    g = np.atleast_1d(body.gauge(A + delta * U))
    max_gauge = float(g.max())
    ok = max_gauge <= 1.0 + eps + 1e-9
    try:
        ex = float(np.max(body.dist((1.0 + delta_prime) * bd, norm)))
        ok = ok and ex <= eps + 1e-9
    except NotImplementedError:
        ex = None
    return ExpansionResult(delta, delta_prime, r, R, max_gauge, ex, bool(ok))


# ---------------------------------------------------------------------------
# antipodal search

@dataclass
class DiameterResult:
    piece: int
    x: np.ndarray
    gap: float
    candidates_checked: int


def _unit_ball_norm(ambient) -> AmbientNorm:
    if not isinstance(ambient, Ball) or np.any(ambient.center) or ambient.radius != 1.0:
        raise PreconditionError("find_diameter needs a centred unit ball as ambient")
    return ambient.norm


def find_diameter(cover: Cover, resolution: int = 128, samples: int = 20000, rng=0,
                  tol: float = 1e-6, refine: int = 8) -> DiameterResult:
    """A unit ``x`` with ``x`` and ``-x`` in the same piece.

    Directions come from :func:`sphere_mesh` for N <= 3 and random draws
    otherwise. Pieces are scanned in input order and the first one with an
    admissible pair wins; if none is found on the candidate set, the best
    near misses are refined by Nelder-Mead on the antipodal gap
    ``max(viol_j(x), viol_j(-x))``.
    """
    norm = _unit_ball_norm(cover.ambient)
    N = cover.dim
    if N < 2:
        raise PreconditionError("find_diameter needs N >= 2")
    if N <= 3:
        D = sphere_mesh(N, resolution)
    else:
        D = random_unit_vectors(L2, N, samples, make_rng(rng))
    D = D / norm(D)[:, None]

    def gaps(X):
        return np.maximum(cover.violations(X), cover.violations(-X))

    G = gaps(D)
    for j in range(len(cover)):
        i = int(np.argmin(G[:, j]))
        if G[i, j] <= tol:
            return DiameterResult(j, D[i].copy(), float(G[i, j]), D.shape[0])
    # local refinement from the best near misses
    best = (np.inf, None, None)
    flat = np.argsort(G, axis=None)[: refine * len(cover)]
    seen = set()
    for f in flat:
        i, j = np.unravel_index(f, G.shape)
        if (i, j) in seen:
            continue
        seen.add((i, j))
        piece = cover.pieces[j]
        fun = lambda y: _gap(piece, y / norm(y)) if np.any(y) else np.inf
        res = minimize(fun, D[i], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        x = res.x / norm(res.x)
        g = _gap(piece, x)
        if g < best[0]:
            best = (g, j, x)
        if g <= tol:
            break
    if best[0] <= tol:
        return DiameterResult(int(best[1]), best[2], best[0], D.shape[0])
    raise SearchExhausted("no antipodal pair inside a single piece",
                          best={"piece": best[1], "x": best[2], "gap": best[0]})


def _gap(piece, x):
    return float(max(piece.violation(x), piece.violation(-x)))


# ---------------------------------------------------------------------------
# cube cylinders

@dataclass
class CubeCylinderResult:
    piece: int
    prefix: Tuple[int, ...]
    verified: bool


def cube_vertices(N: int) -> np.ndarray:
    """All ``2^N`` sign vectors, lexicographic with -1 before +1 in each slot."""
    bits = (np.arange(2 ** N)[:, None] >> np.arange(N - 1, -1, -1)) & 1
    return 2.0 * bits - 1.0


def find_cube_cylinder(cover: Cover, tol: float = DEFAULT.membership,
                       chunk: int = 1 << 16) -> Optional[CubeCylinderResult]:
    """Shortest prefix ``a`` and piece containing every vertex of ``{a} x {-1,1}^(N-i)``.

    Prefix lengths are scanned upwards, prefixes lexicographically, pieces in
    input order. Returns None if no piece contains even a single full vertex
    (the pieces then fail to cover the vertex set).
    """
    N = cover.dim
    if N > 24:
        raise PreconditionError("find_cube_cylinder is limited to N <= 24")
    total = 2 ** N
    M = np.empty((len(cover), total), dtype=bool)
    for s in range(0, total, chunk):
        idx = np.arange(s, min(total, s + chunk))
        V = 2.0 * ((idx[:, None] >> np.arange(N - 1, -1, -1)) & 1) - 1.0
        M[:, idx] = (cover.violations(V) <= tol).T
    for i in range(N + 1):
        ok = M.reshape(len(cover), 2 ** i, 2 ** (N - i)).all(axis=2)
        hit = ok.any(axis=0)
        if hit.any():
            p = int(np.argmax(hit))
            j = int(np.argmax(ok[:, p]))
            prefix = tuple(int(2 * ((p >> (i - 1 - t)) & 1) - 1) for t in range(i))
            return CubeCylinderResult(j, prefix, verify_cube_cylinder(cover, j, prefix, tol))
    return None


def verify_cube_cylinder(cover: Cover, piece: int, prefix, tol: float = DEFAULT.membership) -> bool:
    """Independent check: the piece contains all completions of ``prefix``."""
    N = cover.dim
    i = len(prefix)
    tail = cube_vertices(N - i) if N > i else np.zeros((1, 0))
    V = np.hstack([np.tile(np.asarray(prefix, dtype=float), (tail.shape[0], 1)), tail])
    return bool(np.all(np.atleast_1d(cover.pieces[piece].violation(V)) <= tol))
