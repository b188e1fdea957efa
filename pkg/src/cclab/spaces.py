"""Ambient norms, subspaces, seeded sampling and small sphere meshes."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PreconditionError


class AmbientNorm(enum.Enum):
    L1 = "L1"
    L2 = "L2"
    Linf = "Linf"

    @classmethod
    def parse(cls, value) -> "AmbientNorm":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        if key in ("inf", "linfty", "l_inf", "max"):
            return cls.Linf
        raise PreconditionError(f"unknown norm {value!r}")

    @property
    def dual(self) -> "AmbientNorm":
        return {AmbientNorm.L1: AmbientNorm.Linf,
                AmbientNorm.L2: AmbientNorm.L2,
                AmbientNorm.Linf: AmbientNorm.L1}[self]

    def __call__(self, x, axis=-1):
        x = np.asarray(x, dtype=float)
        if x.shape[axis] == 0:
            raise PreconditionError("norm of a 0-dimensional vector")
        if self is AmbientNorm.L1:
            return np.sum(np.abs(x), axis=axis)
        if self is AmbientNorm.L2:
            return np.sqrt(np.sum(x * x, axis=axis))
        return np.max(np.abs(x), axis=axis)


L1, L2, Linf = AmbientNorm.L1, AmbientNorm.L2, AmbientNorm.Linf


def norm_eval(p: AmbientNorm, x) -> float:
    """Evaluate ``||x||_p``; rows are treated as separate vectors."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise PreconditionError("norm_eval needs a vector of dimension >= 1")
    if not np.all(np.isfinite(x)):
        raise PreconditionError("norm_eval needs finite entries")
    return AmbientNorm.parse(p)(x)


def dual_norm_of_ones(p: AmbientNorm, N: int) -> float:
    """``||(1,...,1)||`` in the dual of ``p``."""
    return {L1: 1.0, L2: float(np.sqrt(N)), Linf: float(N)}[p]


# --------------------------------------------------------------------------
# randomness

def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_rng(master_seed: int, worker: int) -> np.random.Generator:
    """Worker stream for ``master_seed xor worker``."""
    return np.random.default_rng(int(master_seed) ^ int(worker))


# --------------------------------------------------------------------------
# subspaces

@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace stored as an ``N x n`` matrix with orthonormal columns."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2:
            raise PreconditionError("basis must be a 2-D array")
        if B.shape[1] > B.shape[0]:
            raise PreconditionError("subspace dimension exceeds ambient dimension")
        if B.shape[1] and not np.allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-10, rtol=0):
            raise PreconditionError("basis columns are not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def span(cls, vectors, rank_tol=1e-10) -> "Subspace":
        """Orthonormal basis for the span of the rows of ``vectors``."""
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        if V.size == 0:
            raise PreconditionError("span of an empty family needs an ambient dimension")
        U, s, _ = np.linalg.svd(V.T, full_matrices=False)
        rank = int(np.sum(s > rank_tol * max(1.0, s.max(initial=0.0))))
        return cls(_canonical_signs(U[:, :rank]))

    @classmethod
    def coordinates(cls, N: int, idx) -> "Subspace":
        idx = list(idx)
        B = np.zeros((N, len(idx)))
        B[idx, range(len(idx))] = 1.0
        return cls(B)

    @classmethod
    def full(cls, N: int) -> "Subspace":
        return cls(np.eye(N))

    @classmethod
    def zero(cls, N: int) -> "Subspace":
        return cls(np.zeros((N, 0)))

    def complement(self) -> "Subspace":
        N, n = self.basis.shape
        if n == 0:
            return Subspace.full(N)
        Q, _ = np.linalg.qr(self.basis, mode="complete")
        return Subspace(_canonical_signs(Q[:, n:]))

    def project(self, x):
        return project(self, x)

    def contains(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - project(self, x)) <= tol * max(1.0, np.linalg.norm(x)))


def _canonical_signs(B):
    # flip columns so the largest entry is positive (deterministic bases)
    if B.size == 0:
        return B
    idx = np.argmax(np.abs(B), axis=0)
    signs = np.sign(B[idx, np.arange(B.shape[1])])
    signs[signs == 0] = 1.0
    return B * signs


def random_unit_vector(p: AmbientNorm, N: int, rng) -> np.ndarray:
    """Gaussian draw rescaled onto the unit sphere of ``p``."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    rng = make_rng(rng)
    while True:
        g = rng.standard_normal(N)
        s = AmbientNorm.parse(p)(g)
        if s > 0:
            return g / s


def random_unit_vectors(p: AmbientNorm, N: int, m: int, rng) -> np.ndarray:
    rng = make_rng(rng)
    G = rng.standard_normal((m, N))
    s = AmbientNorm.parse(p)(G)
    bad = s == 0
    while np.any(bad):
        G[bad] = rng.standard_normal((int(bad.sum()), N))
        s = AmbientNorm.parse(p)(G)
        bad = s == 0
    return G / s[:, None]


def random_subspace(N: int, n: int, rng) -> Subspace:
    """Haar-distributed n-dimensional subspace of R^N."""
    return Subspace(random_frame(N, n, rng))


def random_frame(N: int, n: int, rng) -> np.ndarray:
    if not 0 <= n <= N:
        raise PreconditionError(f"need 0 <= n <= N, got n={n}, N={N}")
    rng = make_rng(rng)
    if n == 0:
        return np.zeros((N, 0))
    while True:
        G = rng.standard_normal((N, n))
        Q, R = np.linalg.qr(G)
        d = np.diag(R)
        if np.all(np.abs(d) > 1e-12 * np.sqrt(N)):
            return Q * np.sign(d)


def project(F: Subspace, x):
    """Orthogonal projection onto ``F``; rows of a 2-D input are projected separately."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != F.ambient_dim:
        raise PreconditionError("dimension mismatch in project")
    B = F.basis
    return (x @ B) @ B.T


def unit_sphere_samples(F, m: int, rng, norm: AmbientNorm = L2) -> np.ndarray:
    """``m`` points of ``F`` with ``norm``-value 1 (Gaussian in F, rescaled)."""
    B = F.basis if isinstance(F, Subspace) else np.asarray(F)
    rng = make_rng(rng)
    n = B.shape[1]
    X = rng.standard_normal((m, n)) @ B.T
    s = AmbientNorm.parse(norm)(X)
    return X / s[:, None]


def basis_directions(F, norm: AmbientNorm = L2) -> np.ndarray:
    """The ``±`` basis vectors of ``F`` rescaled to ``norm``-value 1."""
    B = F.basis if isinstance(F, Subspace) else np.asarray(F)
    D = np.vstack([B.T, -B.T])
    return D / AmbientNorm.parse(norm)(D)[:, None]


def sample_ball(p: AmbientNorm, N: int, m: int, rng, radius: float = 1.0) -> np.ndarray:
    """Uniform samples from the ``p``-ball of given radius centred at 0."""
    rng = make_rng(rng)
    p = AmbientNorm.parse(p)
    if p is L2:
        G = rng.standard_normal((m, N))
        G /= np.linalg.norm(G, axis=1)[:, None]
        r = rng.random(m) ** (1.0 / N)
        return radius * G * r[:, None]
    if p is Linf:
        return radius * (2.0 * rng.random((m, N)) - 1.0)
    # uniform in the cross-polytope: Dirichlet(1,...,1) weights with a slack
    # coordinate, then random signs
    E = rng.exponential(size=(m, N + 1))
    W = E[:, :N] / E.sum(axis=1)[:, None]
    S = rng.choice([-1.0, 1.0], size=(m, N))
    return radius * W * S


def sample_subspace_ball(F: Subspace, m: int, rng, norm: AmbientNorm = L2) -> np.ndarray:
    """Uniform samples of ``B_X ∩ F`` for the Euclidean norm; for other norms
    a radial mix (uniform radius^(1/n) times a rescaled Gaussian direction)."""
    rng = make_rng(rng)
    n = F.dim
    if n == 0:
        return np.zeros((m, F.ambient_dim))
    U = unit_sphere_samples(F, m, rng, norm)
    r = rng.random(m) ** (1.0 / n)
    return U * r[:, None]


# --------------------------------------------------------------------------
# deterministic meshes

def sphere_mesh(N: int, resolution: int) -> np.ndarray:
    """Antipodally closed point set on the Euclidean unit sphere of R^N, N in {2, 3}.

    For N = 2 the mesh is the regular polygon with ``resolution`` rounded up
    to a multiple of 4 vertices (arc spacing ``<= 2*pi/resolution``). For
    N = 3 each face of the cube ``[-1,1]^3`` carries a ``resolution x
    resolution`` grid that is pushed radially onto the sphere.
    """
    if resolution < 4:
        raise PreconditionError("resolution must be >= 4")
    if N not in (2, 3):
        raise PreconditionError(
            f"sphere_mesh supports N in {{2, 3}}, got N={N}; use random sampling instead")
    return _sphere_mesh(int(N), int(resolution)).copy()


@lru_cache(maxsize=16)
def _sphere_mesh(N, resolution):
    if N == 2:
        m = -(-resolution // 4) * 4
        half = m // 2
        t = 2.0 * np.pi * np.arange(half) / m
        P = np.column_stack([np.cos(t), np.sin(t)])
        # exact axis points
        q = m // 4
        P[0] = (1.0, 0.0)
        P[q] = (0.0, 1.0)
        return np.vstack([P, -P])
    r = int(resolution)
    g = (2.0 * np.arange(r + 1) - r) / r
    u, v = np.meshgrid(g, g, indexing="ij")
    u, v = u.ravel(), v.ravel()
    one = np.ones_like(u)
    faces = [np.column_stack([one, u, v]),
             np.column_stack([u, one, v]),
             np.column_stack([u, v, one])]
    P = np.vstack(faces)
    P /= np.linalg.norm(P, axis=1)[:, None]
    P = np.vstack([P, -P])
    _, keep = np.unique(np.round(P, 12), axis=0, return_index=True)
    return P[np.sort(keep)]


def subspace_sphere_mesh(F: Subspace, resolution: int) -> np.ndarray:
    """Unit-sphere mesh of ``F`` (dim 1, 2 or 3) embedded in the ambient space."""
    n = F.dim
    if n == 1:
        pts = np.array([[1.0], [-1.0]])
    elif n in (2, 3):
        pts = sphere_mesh(n, resolution)
    else:
        raise PreconditionError(f"mesh needs 1 <= dim(F) <= 3, got {n}")
    return pts @ F.basis.T
