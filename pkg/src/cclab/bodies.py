"""Closed convex bodies with membership, gauge, support and distance oracles.

Every body accepts either a single point of shape ``(N,)`` or a batch of
points of shape ``(m, N)`` and answers with a scalar or an ``(m,)`` array.
Bodies are immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import lp
from .errors import ConvergenceError, PreconditionError
from .spaces import L1, L2, AmbientNorm, Linf, dual_norm_of_ones, make_rng, sample_ball
from .tolerances import DEFAULT


def _rows(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return X[None, :], True
    return X, False


def _out(values, single):
    return float(values[0]) if single else values


# ---------------------------------------------------------------------------
# support of the ambient unit ball restricted to a subspace

def section_support(norm: AmbientNorm, Fb: np.ndarray, D) -> np.ndarray:
    """``sup { d . u : u in F, ||u|| <= 1 }`` for each row ``d`` of ``D``.

    ``Fb`` is an orthonormal ``N x n`` basis of F. Euclidean sections and the
    full space are closed form; ℓ1/ℓ∞ sections of a proper subspace are
    small linear programs.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    N, n = Fb.shape
    if n == 0:
        return np.zeros(D.shape[0])
    if norm is L2:
        return np.linalg.norm(D @ Fb, axis=1)
    if n == N:
        return norm.dual(D)
    C = D @ Fb
    out = np.empty(D.shape[0])
    for i, c in enumerate(C):
        if not np.any(c):
            out[i] = 0.0
            continue
        if norm is Linf:
            res = lp.maximize(c, A_ub=np.vstack([Fb, -Fb]), b_ub=np.ones(2 * N))
        else:
            A = np.block([[Fb, -np.eye(N)], [-Fb, -np.eye(N)],
                          [np.zeros((1, n)), np.ones((1, N))]])
            b = np.concatenate([np.zeros(2 * N), [1.0]])
            cc = np.concatenate([c, np.zeros(N)])
            res = lp.maximize(cc, A_ub=A, b_ub=b,
                              bounds=[(None, None)] * n + [(0, None)] * N)
        out[i] = res.value
    return out


def _polytope_section_radius(A, b, x, Fb, norm):
    slack = b - A @ x
    if np.any(slack < 0):
        return 0.0
    s = section_support(norm, Fb, A)
    live = s > 1e-14
    if not np.any(live):
        return np.inf
    return float(np.min(slack[live] / s[live]))


def _quad_ball_radius(s, m, beta):
    """Largest λ with ``max_{|u| <= λ} beta.u + u^T diag(m) u <= s``.

    ``m >= 0`` are the eigenvalues of the restricted quadratic form and
    ``beta`` the linear term in the same eigenbasis; ``s > 0``. The maximizer
    is ``u = beta / (2(mu - m))`` for the multiplier ``mu > max m`` solving
    the secular equation ``V(mu) = s``.
    """
    m = [float(v) for v in m]
    b2 = [float(v) * float(v) for v in beta]
    mmax = max(m) if m else 0.0
    scale = max(1.0, mmax)
    if mmax <= 1e-15 * scale:
        nb = math.sqrt(sum(b2))
        return math.inf if nb == 0 else s / nb
    tol_top = mmax * (1.0 - 1e-12)
    top = [bi for bi, mi in zip(b2, m) if mi >= tol_top]
    rest = [(bi, mi) for bi, mi in zip(b2, m) if mi < tol_top]

    # work with g = mu - max m and exact gaps dm so mu - m_i never cancels
    dm = [mmax - mi for mi in m]

    def V(g):
        mu = mmax + g
        return sum(bi * (mu + g + di) / (4.0 * (g + di) ** 2) for bi, di in zip(b2, dm))

    def lam(g):
        return math.sqrt(sum(bi / (4.0 * (g + di) ** 2) for bi, di in zip(b2, dm)))

    if sum(top) <= 1e-28 * max(1.0, sum(b2)):
        # hard case: the top eigendirection absorbs the remaining slack
        v_lim = sum(bi * (2.0 * mmax - mi) / (4.0 * (mmax - mi) ** 2) for bi, mi in rest)
        if v_lim <= s:
            l2 = sum(bi / (4.0 * (mmax - mi) ** 2) for bi, mi in rest) + (s - v_lim) / mmax
            return math.sqrt(l2)
    hi = scale
    while V(hi) > s:
        hi *= 2.0
    lo = hi
    while V(lo) <= s:
        lo *= 0.5
        if lo < 1e-300:
            return lam(lo)
    g = brentq(lambda t: V(t) - s, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)
    return lam(g)


# ---------------------------------------------------------------------------

class ConvexBody:
    """Common interface. Subclasses implement ``violation`` and ``dim``."""

    dim: int
    support_exact: bool = True

    # membership -----------------------------------------------------------
    def violation(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def contains(self, X, tol: float = DEFAULT.membership):
        v = self.violation(X)
        return v <= tol if np.ndim(v) else bool(v <= tol)

    # structure ------------------------------------------------------------
    def halfspaces(self):
        """``(A, b)`` with ``self = {A x <= b}`` for polyhedral bodies, else None."""
        return None

    @property
    def is_polyhedral(self) -> bool:
        return self.halfspaces() is not None

    # gauge ----------------------------------------------------------------
    def gauge(self, X):
        return _gauge_bisect(self, X)

    def _require_zero_interior(self):
        if not self.interior_radius_at(np.zeros(self.dim)) > 0:
            raise PreconditionError("gauge needs 0 in the interior of the body")

    # support --------------------------------------------------------------
    def support(self, d) -> float:
        H = self.halfspaces()
        if H is None:
            raise NotImplementedError(type(self).__name__)
        return _lp_support(H, d)

    # radii ----------------------------------------------------------------
    def interior_radius_at(self, x, norm: AmbientNorm = L2) -> float:
        H = self.halfspaces()
        if H is None:
            raise NotImplementedError(type(self).__name__)
        A, b = H
        x = np.asarray(x, dtype=float)
        slack = b - A @ x
        if np.any(slack < 0):
            return 0.0
        if slack.size == 0:
            return np.inf
        return float(np.min(slack / norm.dual(A)))

    def section_radius(self, x, Fb, norm: AmbientNorm = L2) -> float:
        """Largest λ with ``x + λ (B_X ∩ F) ⊂ body``; exact or NotImplementedError."""
        H = self.halfspaces()
        if H is None:
            raise NotImplementedError(type(self).__name__)
        return _polytope_section_radius(H[0], H[1], np.asarray(x, dtype=float), Fb, norm)

    # projections and distances --------------------------------------------
    def project(self, X):
        H = self.halfspaces()
        if H is None:
            raise NotImplementedError(type(self).__name__)
        return _project_halfspaces(H[0], H[1], X)

    def dist(self, X, norm: AmbientNorm = L2):
        X2, single = _rows(X)
        if norm is L2:
            d = np.linalg.norm(X2 - self.project(X2), axis=1)
            return _out(d, single)
        H = self.halfspaces()
        if H is None:
            raise NotImplementedError(f"{norm.value} distance to {type(self).__name__}")
        return _out(_polyhedral_dist(H, X2, norm), single)

    def outward_normal(self, x) -> np.ndarray:
        H = self.halfspaces()
        if H is None:
            raise NotImplementedError(type(self).__name__)
        A, b = H
        r = A @ np.asarray(x, dtype=float) - b
        return A[int(np.argmax(r))].copy()

    # geometry helpers -------------------------------------------------------
    @cached_property
    def bounding_box(self):
        H = self.halfspaces()
        if H is None:
            raise NotImplementedError(type(self).__name__)
        N = self.dim
        lo, hi = np.empty(N), np.empty(N)
        for i in range(N):
            e = np.zeros(N)
            e[i] = 1.0
            hi[i] = _lp_support(H, e)
            lo[i] = -_lp_support(H, -e)
        return lo, hi

    def deep_point(self, norm: AmbientNorm = L2) -> np.ndarray:
        """Centre of a largest inscribed ``norm``-ball (approximate for non-polyhedral bodies)."""
        H = self.halfspaces()
        if H is not None:
            return _chebyshev_center(H, norm)
        return _deep_point_search(self, norm)

    def _dual_norms(self, norm):
        return None


# ---------------------------------------------------------------------------
# polyhedral helpers

def _lp_support(H, d):
    A, b = H
    d = np.asarray(d, dtype=float)
    if A.shape[0] == 0:
        return 0.0 if not np.any(d) else np.inf
    return lp.maximize(d, A_ub=A, b_ub=b).value


def _chebyshev_center(H, norm):
    A, b = H
    N = A.shape[1]
    w = norm.dual(A)
    c = np.zeros(N + 1)
    c[-1] = 1.0
    res = lp.maximize(c, A_ub=np.column_stack([A, w]), b_ub=b,
                      bounds=[(None, None)] * N + [(0, None)])
    if res.status != "optimal":
        raise PreconditionError(f"Chebyshev centre LP is {res.status}")
    return res.x[:N]


def _project_halfspaces(A, b, X, tol=1e-12, max_iter=20000):
    X2, single = _rows(X)
    m = A.shape[0]
    if m == 0:
        return X.copy() if not single else X2[0].copy()
    if m == 1:
        a = A[0]
        r = np.maximum(X2 @ a - b[0], 0.0) / (a @ a)
        Y = X2 - r[:, None] * a
        return Y[0] if single else Y
    if m == 2:
        Y = _project_two_halfspaces(A, b, X2)
        return Y[0] if single else Y
    Y = X2.copy()
    inc = np.zeros((m,) + X2.shape)
    norms2 = np.einsum("ij,ij->i", A, A)
    active = np.any(X2 @ A.T - b > 0, axis=1)
    for it in range(max_iter):
        if not active.any():
            break
        prev = Y.copy()
        for i in range(m):
            Z = Y + inc[i]
            r = np.maximum(Z @ A[i] - b[i], 0.0) / norms2[i]
            P = Z - r[:, None] * A[i]
            inc[i] = Z - P
            Y = P
        change = np.max(np.abs(Y - prev), axis=1)
        viol = np.max(Y @ A.T - b, axis=1)
        active &= ~((change < tol) & (viol < 1e-10))
    else:
        raise ConvergenceError("Dykstra projection did not converge",
                               best=np.linalg.norm(X2 - Y, axis=1))
    return Y[0] if single else Y


def _project_two_halfspaces(A, b, X):
    a1, a2 = A
    r1 = X @ a1 - b[0]
    r2 = X @ a2 - b[1]
    Y = X.copy()
    best = np.full(X.shape[0], np.inf)
    inside = (r1 <= 0) & (r2 <= 0)
    best[inside] = 0.0
    P1 = X - (np.maximum(r1, 0.0) / (a1 @ a1))[:, None] * a1
    ok1 = (P1 @ a2 - b[1] <= 1e-12) & ~inside
    d1 = np.linalg.norm(X - P1, axis=1)
    P2 = X - (np.maximum(r2, 0.0) / (a2 @ a2))[:, None] * a2
    ok2 = (P2 @ a1 - b[0] <= 1e-12) & ~inside
    d2 = np.linalg.norm(X - P2, axis=1)
    for ok, P, d in ((ok1, P1, d1), (ok2, P2, d2)):
        take = ok & (d < best)
        Y[take] = P[take]
        best[take] = d[take]
    rest = ~np.isfinite(best)
    if rest.any():
        G = A @ A.T
        if abs(np.linalg.det(G)) < 1e-14:
            # parallel faces -> fall back to iterative scheme
            Y[rest] = _dykstra_generic(A, b, X[rest])
        else:
            R = np.column_stack([r1[rest], r2[rest]])
            lam = np.linalg.solve(G, R.T).T
            Y[rest] = X[rest] - lam @ A
    return Y


def _dykstra_generic(A, b, X):
    Ab = np.vstack([A, A[:1]])
    bb = np.concatenate([b, b[:1]])
    return _project_halfspaces(Ab, bb, X)


def _polyhedral_dist(H, X, norm):
    A, b = H
    N = A.shape[1]
    if A.shape[0] == 1:
        return np.maximum(X @ A[0] - b[0], 0.0) / norm.dual(A[0])
    out = np.empty(X.shape[0])
    for k, x in enumerate(X):
        if np.all(A @ x <= b):
            out[k] = 0.0
            continue
        if norm is Linf:
            c = np.zeros(N + 1)
            c[-1] = -1.0
            I = np.eye(N)
            one = np.ones((N, 1))
            Aub = np.vstack([np.column_stack([A, np.zeros(A.shape[0])]),
                             np.hstack([I, -one]), np.hstack([-I, -one])])
            bub = np.concatenate([b, x, -x])
            res = lp.maximize(c, A_ub=Aub, b_ub=bub,
                              bounds=[(None, None)] * N + [(0, None)])
        else:
            c = np.concatenate([np.zeros(N), -np.ones(N)])
            I = np.eye(N)
            Aub = np.vstack([np.hstack([A, np.zeros_like(A)]),
                             np.hstack([I, -I]), np.hstack([-I, -I])])
            bub = np.concatenate([b, x, -x])
            res = lp.maximize(c, A_ub=Aub, b_ub=bub,
                              bounds=[(None, None)] * N + [(0, None)] * N)
        out[k] = -res.value
    return out


def _gauge_bisect(body, X, rel_tol=DEFAULT.bisection_rel):
    body._require_zero_interior()
    X2, single = _rows(X)
    m = X2.shape[0]
    out = np.zeros(m)
    nz = np.any(X2 != 0, axis=1)
    if not nz.any():
        return _out(out, single)
    Z = X2[nz]
    hi = np.ones(Z.shape[0])
    for _ in range(2000):
        bad = body.violation(Z / hi[:, None]) > 0
        if not bad.any():
            break
        hi[bad] *= 2.0
    lo = hi.copy()
    for _ in range(2000):
        good = body.violation(Z / lo[:, None]) <= 0
        if not good.any():
            break
        lo[good] *= 0.5
        if np.all(lo[good] < 1e-300):
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        inside = body.violation(Z / mid[:, None]) <= 0
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
        if np.all(hi - lo <= rel_tol * hi):
            break
    out[nz] = hi
    return _out(out, single)


def _deep_point_search(body, norm, iters=400):
    cache = body.__dict__.setdefault("_deep_cache", {})
    if norm not in cache:
        cache[norm] = _deep_point_uncached(body, norm, iters)
    return cache[norm].copy()


def _deep_point_uncached(body, norm, iters):
    starts = []
    for cand in body._deep_candidates(norm):
        if body.contains(cand, 0.0):
            starts.append(cand)
    if not starts:
        starts.append(np.zeros(body.dim))
    f = lambda x: body.interior_radius_at(x, norm)
    best = max(starts, key=f)
    lo, hi = body.bounding_box
    scale = float(np.max(hi - lo)) if np.all(np.isfinite(hi - lo)) else 1.0
    x, _ = pattern_ascent(f, best, 0.25 * scale, iters=iters)
    return x


def pattern_ascent(f, x0, step, iters=200, min_step_rel=1e-10, directions=None):
    """Coordinate pattern search maximizing ``f``; returns ``(x, f(x))``.

    Opportunistic: the first improving direction is taken and tried first on
    the next sweep; the step halves after a sweep without improvement.
    """
    x = np.array(x0, dtype=float)
    fx = f(x)
    N = x.size
    if directions is None:
        directions = np.vstack([np.eye(N), -np.eye(N)])
    order = list(range(len(directions)))
    floor = min_step_rel * step
    for _ in range(iters):
        if step < floor:
            break
        improved = False
        for pos, k in enumerate(order):
            y = x + step * directions[k]
            fy = f(y)
            if fy > fx:
                x, fx = y, fy
                improved = True
                order.insert(0, order.pop(pos))
                break
        if not improved:
            step *= 0.5
    return x, fx


# ---------------------------------------------------------------------------
# concrete bodies

@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    """``{x : ||x - center||_norm <= radius}``."""

    center: np.ndarray
    radius: float
    norm: AmbientNorm = L2

    def __post_init__(self):
        c = np.array(self.center, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "norm", AmbientNorm.parse(self.norm))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius < 0:
            raise PreconditionError("ball radius must be >= 0")

    @classmethod
    def unit(cls, N: int, norm: AmbientNorm = L2) -> "Ball":
        return cls(np.zeros(N), 1.0, norm)

    @property
    def dim(self):
        return self.center.size

    def violation(self, X):
        X2, single = _rows(X)
        return _out(self.norm(X2 - self.center) - self.radius, single)

    def halfspaces(self):
        if self.norm is Linf:
            N = self.dim
            A = np.vstack([np.eye(N), -np.eye(N)])
            b = np.concatenate([self.center + self.radius, self.radius - self.center])
            return A, b
        return None

    def gauge(self, X):
        X2, single = _rows(X)
        c, r = self.center, self.radius
        if not np.any(c):
            if r <= 0:
                raise PreconditionError("gauge needs 0 in the interior of the body")
            return _out(self.norm(X2) / r, single)
        if self.norm is L2:
            cc = c @ c
            if cc >= r * r:
                raise PreconditionError("gauge needs 0 in the interior of the body")
            xc = X2 @ c
            xx = np.einsum("ij,ij->i", X2, X2)
            den = r * r - cc
            # x/g in ball  <=>  ||x - g c|| <= g r; smallest positive root in g
            t = (-xc + np.sqrt(xc * xc + den * xx)) / den
            return _out(t, single)
        return _gauge_bisect(self, X)

    def support(self, d):
        d = np.asarray(d, dtype=float)
        return float(d @ self.center + self.radius * self.norm.dual(d))

    def interior_radius_at(self, x, norm: AmbientNorm = L2):
        x = np.asarray(x, dtype=float)
        d = x - self.center
        r = self.radius
        q = self.norm
        if q(d) > r:
            return 0.0
        if q is norm:
            return float(r - q(d))
        if q is Linf:
            return float(r - Linf(d))
        if q is L1:
            return float((r - L1(d)) / dual_norm_of_ones(norm, self.dim))
        # Euclidean ball, ℓ1 or ℓ∞ ambient: worst vertex of the ambient ball
        dd = float(d @ d)
        if norm is L1:
            a = float(Linf(d))
            return float(max(0.0, -a + np.sqrt(a * a - dd + r * r)))
        N = self.dim
        a = float(L1(d))
        return float(max(0.0, (-a + np.sqrt(a * a - N * (dd - r * r))) / N))

    def section_radius(self, x, Fb, norm: AmbientNorm = L2):
        if self.norm is Linf:
            return ConvexBody.section_radius(self, x, Fb, norm)
        if self.norm is L2 and norm is L2:
            d = np.asarray(x, dtype=float) - self.center
            w = Fb.T @ d
            perp2 = float(d @ d - w @ w)
            r2 = self.radius ** 2
            if perp2 > r2:
                return 0.0
            return float(max(0.0, np.sqrt(r2 - max(perp2, 0.0)) - np.linalg.norm(w)))
        if Fb.shape[1] == Fb.shape[0]:
            return self.interior_radius_at(x, norm)
        raise NotImplementedError("section radius of a non-Euclidean ball")

    def project(self, X):
        X2, single = _rows(X)
        D = X2 - self.center
        r = self.radius
        if self.norm is L2:
            n = np.linalg.norm(D, axis=1)
            s = np.where(n > r, r / np.where(n > 0, n, 1.0), 1.0)
            Y = self.center + D * s[:, None]
        elif self.norm is Linf:
            Y = self.center + np.clip(D, -r, r)
        else:
            Y = self.center + _project_l1_ball(D, r)
        return Y[0] if single else Y

    def dist(self, X, norm: AmbientNorm = L2):
        if norm is self.norm:
            X2, single = _rows(X)
            return _out(np.maximum(self.norm(X2 - self.center) - self.radius, 0.0), single)
        return ConvexBody.dist(self, X, norm)

    def outward_normal(self, x):
        d = np.asarray(x, dtype=float) - self.center
        if self.norm is L2:
            return d
        if self.norm is L1:
            return np.sign(d)
        g = np.zeros_like(d)
        i = int(np.argmax(np.abs(d)))
        g[i] = np.sign(d[i]) or 1.0
        return g

    @cached_property
    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def deep_point(self, norm: AmbientNorm = L2):
        return self.center.copy()


def _project_l1_ball(D, r):
    """Euclidean projection of each row of ``D`` onto ``{||y||_1 <= r}``."""
    out = D.copy()
    a = np.abs(D)
    outside = a.sum(axis=1) > r
    if not outside.any():
        return out
    A = a[outside]
    U = -np.sort(-A, axis=1)
    css = np.cumsum(U, axis=1) - r
    k = np.arange(1, A.shape[1] + 1)
    cond = U - css / k > 0
    rho = A.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(A.shape[0]), rho] / (rho + 1)
    out[outside] = np.sign(D[outside]) * np.maximum(A - theta[:, None], 0.0)
    return out


@dataclass(frozen=True, eq=False)
class Box(ConvexBody):
    """Axis-aligned box ``[lo, hi]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape or np.any(lo > hi):
            raise PreconditionError("box needs lo <= hi of equal length")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, N: int, half: float = 1.0) -> "Box":
        return cls(-half * np.ones(N), half * np.ones(N))

    @property
    def dim(self):
        return self.lo.size

    def violation(self, X):
        X2, single = _rows(X)
        v = np.maximum(self.lo - X2, X2 - self.hi).max(axis=1)
        return _out(v, single)

    def halfspaces(self):
        N = self.dim
        return np.vstack([np.eye(N), -np.eye(N)]), np.concatenate([self.hi, -self.lo])

    def gauge(self, X):
        if not (np.all(self.lo < 0) and np.all(self.hi > 0)):
            raise PreconditionError("gauge needs 0 in the interior of the body")
        X2, single = _rows(X)
        g = np.maximum(X2 / self.hi, X2 / self.lo).max(axis=1)
        return _out(np.maximum(g, 0.0), single)

    def support(self, d):
        d = np.asarray(d, dtype=float)
        return float(np.sum(np.maximum(d * self.lo, d * self.hi)))

    def interior_radius_at(self, x, norm: AmbientNorm = L2):
        x = np.asarray(x, dtype=float)
        m = min(float(np.min(x - self.lo)), float(np.min(self.hi - x)))
        return max(m, 0.0)

    def project(self, X):
        return np.clip(np.asarray(X, dtype=float), self.lo, self.hi)

    def dist(self, X, norm: AmbientNorm = L2):
        X2, single = _rows(X)
        return _out(norm(X2 - np.clip(X2, self.lo, self.hi)), single)

    @cached_property
    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def deep_point(self, norm: AmbientNorm = L2):
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True, eq=False)
class Polytope(ConvexBody):
    """``{x : A x <= b}``; rows are rescaled to unit Euclidean length.

    Unbounded polyhedra (halfspaces, cones) are allowed; their support in
    escaping directions is ``inf``.
    """

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        b = np.array(self.b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise PreconditionError("A and b disagree in the number of rows")
        n = np.linalg.norm(A, axis=1)
        if np.any(n == 0):
            raise PreconditionError("polytope rows must be nonzero")
        A = A / n[:, None]
        b = b / n
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def regular_polygon(cls, sides: int, circumradius: float, phase: float = 0.0) -> "Polytope":
        """Regular polygon in R^2 with a vertex at angle ``phase``."""
        t = phase + np.pi / sides + 2.0 * np.pi * np.arange(sides) / sides
        A = np.column_stack([np.cos(t), np.sin(t)])
        b = np.full(sides, circumradius * np.cos(np.pi / sides))
        return cls(A, b)

    @property
    def dim(self):
        return self.A.shape[1]

    def violation(self, X):
        X2, single = _rows(X)
        return _out((X2 @ self.A.T - self.b).max(axis=1), single)

    def halfspaces(self):
        return self.A, self.b

    def gauge(self, X):
        if np.any(self.b <= 0):
            raise PreconditionError("gauge needs 0 in the interior of the body")
        X2, single = _rows(X)
        g = (X2 @ self.A.T / self.b).max(axis=1)
        return _out(np.maximum(g, 0.0), single)


@dataclass(frozen=True, eq=False)
class QuadLin(ConvexBody):
    """``{x : sum_i q_i x_i^2 + a.x <= r}`` with ``q >= 0``."""

    q: np.ndarray
    a: np.ndarray
    r: float

    def __post_init__(self):
        q = np.array(self.q, dtype=float).ravel()
        a = np.array(self.a, dtype=float).ravel()
        if q.shape != a.shape:
            raise PreconditionError("q and a must have equal length")
        if np.any(q < 0):
            raise PreconditionError("q must be entrywise >= 0 (convexity)")
        q.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "r", float(self.r))

    @property
    def dim(self):
        return self.q.size

    def violation(self, X):
        X2, single = _rows(X)
        return _out(X2 * X2 @ self.q + X2 @ self.a - self.r, single)

    @property
    def bounded(self) -> bool:
        return bool(np.all(self.q > 0))

    @property
    def ellipsoid(self):
        """``(center, R)`` with the body equal to ``sum q (x-c)^2 <= R`` (needs q > 0)."""
        c = -self.a / (2.0 * self.q)
        R = self.r + float(np.sum(self.a ** 2 / (4.0 * self.q)))
        return c, R

    def gauge(self, X):
        if self.r <= 0:
            raise PreconditionError("gauge needs 0 in the interior of the body")
        X2, single = _rows(X)
        A = X2 * X2 @ self.q
        b = X2 @ self.a
        return _out((b + np.sqrt(b * b + 4.0 * A * self.r)) / (2.0 * self.r), single)

    def support(self, d):
        d = np.asarray(d, dtype=float)
        free = self.q == 0
        if np.any(free & ((d != 0) | (self.a != 0))):
            return np.inf
        q = np.where(free, 1.0, self.q)
        a = np.where(free, 0.0, self.a)
        c = -a / (2.0 * q)
        R = self.r + float(np.sum(a * a / (4.0 * q)))
        if R < 0:
            return -np.inf
        return float(d @ c + np.sqrt(R * np.sum(np.where(free, 0.0, d * d / q))))

    def interior_radius_at(self, x, norm: AmbientNorm = L2):
        x = np.asarray(x, dtype=float)
        g = float(self.violation(x))
        if g >= 0:
            return 0.0
        grad = 2.0 * self.q * x + self.a
        if norm is L2:
            return _quad_ball_radius(-g, self.q.copy(), grad)
        if norm is L1:
            # vertices x ± ρ e_i of the cross-polytope
            best = np.inf
            for sgn in (1.0, -1.0):
                lin = sgn * grad
                for qi, li in zip(self.q, lin):
                    if qi > 0:
                        rho = 2.0 * (-g) / (li + np.sqrt(li * li + 4.0 * qi * (-g)))
                    elif li > 0:
                        rho = -g / li
                    else:
                        continue
                    best = min(best, rho)
            return float(best)
        raise NotImplementedError("ℓ∞ interior radius of a quadratic body")

    def section_radius(self, x, Fb, norm: AmbientNorm = L2):
        if norm is not L2:
            if Fb.shape[1] == Fb.shape[0]:
                return self.interior_radius_at(x, norm)
            raise NotImplementedError("non-Euclidean section of a quadratic body")
        x = np.asarray(x, dtype=float)
        g = float(self.violation(x))
        if g > 0:
            return 0.0
        b = Fb.T @ (2.0 * self.q * x + self.a)
        M = Fb.T @ (self.q[:, None] * Fb)
        m, U = np.linalg.eigh(M)
        m = np.maximum(m, 0.0)
        beta = U.T @ b
        if g == 0:
            return 0.0 if (np.any(beta) or np.any(m > 0)) else np.inf
        return _quad_ball_radius(-g, m, beta)

    def project(self, X):
        X2, single = _rows(X)
        Y = X2.copy()
        out = self.violation(X2) > 0
        if out.any():
            Z = X2[out]
            q, a = self.q, self.a

            def y_of(mu):
                return (Z - mu[:, None] * a) / (1.0 + 2.0 * mu[:, None] * q)

            hi = np.ones(Z.shape[0])
            for _ in range(2000):
                bad = self.violation(y_of(hi)) > 0
                if not bad.any():
                    break
                hi[bad] *= 2.0
            else:
                raise ConvergenceError("quadratic projection: no feasible multiplier")
            lo = np.zeros_like(hi)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                feas = self.violation(y_of(mid)) <= 0
                hi = np.where(feas, mid, hi)
                lo = np.where(feas, lo, mid)
                if np.all(hi - lo <= 1e-15 * np.maximum(hi, 1e-300)):
                    break
            Y[out] = y_of(hi)
        return Y[0] if single else Y

    def outward_normal(self, x):
        x = np.asarray(x, dtype=float)
        return 2.0 * self.q * x + self.a

    @cached_property
    def bounding_box(self):
        N = self.dim
        pos = self.q > 0
        if np.any(self.a[~pos] != 0):
            return np.full(N, -np.inf), np.full(N, np.inf)
        # a cylinder over the ellipsoid in the q > 0 coordinates
        lo, hi = np.full(N, -np.inf), np.full(N, np.inf)
        q, a = self.q[pos], self.a[pos]
        c = -a / (2.0 * q)
        h = np.sqrt(max(self.r + float(np.sum(a * a / (4.0 * q))), 0.0) / q)
        lo[pos], hi[pos] = c - h, c + h
        return lo, hi

    def deep_point(self, norm: AmbientNorm = L2):
        if self.bounded:
            return self.ellipsoid[0]
        return super().deep_point(norm)

    def _deep_candidates(self, norm):
        return [np.zeros(self.dim)]


@dataclass(frozen=True, eq=False)
class Intersection(ConvexBody):
    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise PreconditionError("intersection of an empty family")
        if len({m.dim for m in members}) != 1:
            raise PreconditionError("members disagree in dimension")
        object.__setattr__(self, "members", members)

    @property
    def dim(self):
        return self.members[0].dim

    def violation(self, X):
        vals = [np.atleast_1d(m.violation(X)) for m in self.members]
        v = np.max(np.vstack(vals), axis=0)
        return float(v[0]) if np.ndim(X) == 1 else v

    def halfspaces(self):
        Hs = [m.halfspaces() for m in self.members]
        if any(H is None for H in Hs):
            return None
        return np.vstack([H[0] for H in Hs]), np.concatenate([H[1] for H in Hs])

    @property
    def support_exact(self):
        return self.is_polyhedral

    def gauge(self, X):
        vals = [np.atleast_1d(m.gauge(X)) for m in self.members]
        g = np.max(np.vstack(vals), axis=0)
        return float(g[0]) if np.ndim(X) == 1 else g

    def support(self, d):
        if self.is_polyhedral:
            return ConvexBody.support(self, d)
        return _projected_ascent_support(self, np.asarray(d, dtype=float))

    def interior_radius_at(self, x, norm: AmbientNorm = L2):
        return float(min(m.interior_radius_at(x, norm) for m in self.members))

    def section_radius(self, x, Fb, norm: AmbientNorm = L2):
        if self.is_polyhedral:
            return ConvexBody.section_radius(self, x, Fb, norm)
        return float(min(m.section_radius(x, Fb, norm) for m in self.members))

    def project(self, X, tol=1e-12, max_iter=20000):
        H = self.halfspaces()
        if H is not None:
            return _project_halfspaces(H[0], H[1], X)
        X2, single = _rows(X)
        Y = X2.copy()
        k = len(self.members)
        inc = np.zeros((k,) + X2.shape)
        active = self.violation(X2) > 0
        for _ in range(max_iter):
            if not active.any():
                break
            prev = Y.copy()
            for i, mem in enumerate(self.members):
                Z = Y[active] + inc[i][active]
                P = mem.project(Z)
                inc[i][active] = Z - P
                Y[active] = P
            change = np.max(np.abs(Y - prev), axis=1)
            viol = self.violation(Y)
            active &= ~((change < tol) & (viol < 1e-10))
        else:
            raise ConvergenceError("Dykstra projection did not converge",
                                   best=np.linalg.norm(X2 - Y, axis=1))
        return Y[0] if single else Y

    def outward_normal(self, x):
        v = [float(m.violation(x)) for m in self.members]
        return self.members[int(np.argmax(v))].outward_normal(x)

    def active_member(self, x) -> int:
        v = [float(m.violation(x)) for m in self.members]
        return int(np.argmax(v))

    @cached_property
    def bounding_box(self):
        N = self.dim
        lo, hi = np.full(N, -np.inf), np.full(N, np.inf)
        if self.is_polyhedral:
            return ConvexBody.bounding_box.func(self)
        for m in self.members:
            try:
                mlo, mhi = m.bounding_box
            except NotImplementedError:
                continue
            lo, hi = np.maximum(lo, mlo), np.minimum(hi, mhi)
        return lo, hi

    def deep_point(self, norm: AmbientNorm = L2):
        if self.is_polyhedral:
            return ConvexBody.deep_point(self, norm)
        return _deep_point_search(self, norm)

    def _deep_candidates(self, norm):
        cands = [np.zeros(self.dim)]
        pts = []
        for m in self.members:
            try:
                pts.append(m.deep_point(norm))
            except Exception:
                continue
        cands.extend(pts)
        if pts:
            cands.append(np.mean(pts, axis=0))
        lo, hi = self.bounding_box
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            cands.append(0.5 * (lo + hi))
        return cands


def _projected_ascent_support(body, d, tol=1e-9, max_iter=5000):
    lo, hi = body.bounding_box
    diam = float(np.linalg.norm(hi - lo)) if np.all(np.isfinite(hi - lo)) else 1.0
    nd = np.linalg.norm(d)
    if nd == 0:
        return 0.0
    step = diam / nd
    x = body.project(body.deep_point())
    val = float(d @ x)
    for _ in range(max_iter):
        y = body.project(x + step * d)
        if np.linalg.norm(y - x) <= tol * max(1.0, diam):
            x = y
            break
        x = y
    return float(d @ x)


@dataclass(frozen=True, eq=False)
class Translate(ConvexBody):
    """``body + t``."""

    body: ConvexBody
    t: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float).ravel()
        if t.size != self.body.dim:
            raise PreconditionError("translation vector has the wrong dimension")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def dim(self):
        return self.body.dim

    @property
    def support_exact(self):
        return self.body.support_exact

    def violation(self, X):
        return self.body.violation(np.asarray(X, dtype=float) - self.t)

    def halfspaces(self):
        H = self.body.halfspaces()
        if H is None:
            return None
        return H[0], H[1] + H[0] @ self.t

    def support(self, d):
        d = np.asarray(d, dtype=float)
        return float(self.body.support(d) + d @ self.t)

    def interior_radius_at(self, x, norm: AmbientNorm = L2):
        return self.body.interior_radius_at(np.asarray(x, dtype=float) - self.t, norm)

    def section_radius(self, x, Fb, norm: AmbientNorm = L2):
        return self.body.section_radius(np.asarray(x, dtype=float) - self.t, Fb, norm)

    def project(self, X):
        return self.body.project(np.asarray(X, dtype=float) - self.t) + self.t

    def dist(self, X, norm: AmbientNorm = L2):
        return self.body.dist(np.asarray(X, dtype=float) - self.t, norm)

    def outward_normal(self, x):
        return self.body.outward_normal(np.asarray(x, dtype=float) - self.t)

    @cached_property
    def bounding_box(self):
        lo, hi = self.body.bounding_box
        return lo + self.t, hi + self.t

    def deep_point(self, norm: AmbientNorm = L2):
        return self.body.deep_point(norm) + self.t


@dataclass(frozen=True, eq=False)
class Scale(ConvexBody):
    """``lam * body`` for ``lam > 0``."""

    body: ConvexBody
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not lam > 0:
            raise PreconditionError("scale factor must be > 0")
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self):
        return self.body.dim

    @property
    def support_exact(self):
        return self.body.support_exact

    def violation(self, X):
        return self.lam * self.body.violation(np.asarray(X, dtype=float) / self.lam)

    def halfspaces(self):
        H = self.body.halfspaces()
        if H is None:
            return None
        return H[0], self.lam * H[1]

    def gauge(self, X):
        return self.body.gauge(X) / self.lam

    def support(self, d):
        return self.lam * self.body.support(d)

    def interior_radius_at(self, x, norm: AmbientNorm = L2):
        return self.lam * self.body.interior_radius_at(np.asarray(x, dtype=float) / self.lam, norm)

    def section_radius(self, x, Fb, norm: AmbientNorm = L2):
        return self.lam * self.body.section_radius(np.asarray(x, dtype=float) / self.lam, Fb, norm)

    def project(self, X):
        return self.lam * self.body.project(np.asarray(X, dtype=float) / self.lam)

    def dist(self, X, norm: AmbientNorm = L2):
        return self.lam * self.body.dist(np.asarray(X, dtype=float) / self.lam, norm)

    def outward_normal(self, x):
        return self.body.outward_normal(np.asarray(x, dtype=float) / self.lam)

    @cached_property
    def bounding_box(self):
        lo, hi = self.body.bounding_box
        return self.lam * lo, self.lam * hi

    def deep_point(self, norm: AmbientNorm = L2):
        return self.lam * self.body.deep_point(norm)


ConvexBody._deep_candidates = lambda self, norm: [np.zeros(self.dim)]


# ---------------------------------------------------------------------------
# functional interface

def contains(body: ConvexBody, x, tol: float = DEFAULT.membership):
    """True iff ``x`` satisfies every defining inequality relaxed by ``tol``."""
    if tol < 0:
        raise PreconditionError("tol must be >= 0")
    return body.contains(x, tol)


def gauge(body: ConvexBody, x):
    """Minkowski functional ``inf{t > 0 : x/t in body}``."""
    return body.gauge(x)


def support(body: ConvexBody, d, return_exact: bool = False):
    """``sup{d.x : x in body}``. With ``return_exact`` also report whether the
    value is exact (intersections of curved bodies use projected ascent)."""
    value = body.support(d)
    return (value, body.support_exact) if return_exact else value


def interior_radius_at(body: ConvexBody, x, norm: AmbientNorm = L2) -> float:
    return body.interior_radius_at(x, AmbientNorm.parse(norm))


def dist_to_body(body: ConvexBody, x, norm: AmbientNorm = L2):
    return body.dist(x, AmbientNorm.parse(norm))


# ---------------------------------------------------------------------------
# sampling

def sample_uniform(body: ConvexBody, m: int, rng, max_batches: int = 10000) -> np.ndarray:
    """Uniform samples from ``body``.

    Centred norm balls are sampled directly; everything else by rejection
    from the bounding box.
    """
    rng = make_rng(rng)
    if isinstance(body, Ball):
        return body.center + sample_ball(body.norm, body.dim, m, rng, body.radius)
    if isinstance(body, Box):
        return body.lo + (body.hi - body.lo) * rng.random((m, body.dim))
    if isinstance(body, Scale):
        return body.lam * sample_uniform(body.body, m, rng, max_batches)
    if isinstance(body, Translate):
        return body.t + sample_uniform(body.body, m, rng, max_batches)
    if isinstance(body, QuadLin) and body.bounded:
        c, R = body.ellipsoid
        if not R > 0:
            raise PreconditionError("cannot sample a degenerate body (empty interior)")
        return c + sample_ball(L2, body.dim, m, rng) * np.sqrt(R / body.q)
    if isinstance(body, Intersection):
        base = _sampling_member(body)
        if base is not None:
            return _reject_from(body, lambda k: sample_uniform(base, k, rng), m, max_batches)
    lo, hi = body.bounding_box
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise PreconditionError("cannot sample an unbounded body")
    if np.any(hi - lo <= 0):
        raise PreconditionError("cannot sample a degenerate body (empty interior)")
    return _reject_from(body, lambda k: lo + (hi - lo) * rng.random((k, body.dim)), m, max_batches)


def _reject_from(body, draw, m, max_batches):
    chunks, have = [], 0
    batch = max(1024, 4 * m)
    for _ in range(max_batches):
        X = draw(batch)
        X = X[body.violation(X) <= 0]
        chunks.append(X)
        have += X.shape[0]
        if have >= m:
            return np.vstack(chunks)[:m]
    raise PreconditionError("rejection sampler failed (body too thin inside its proposal)")


def _log_volume(body):
    """Log volume of members with a direct sampler, else None."""
    N = body.dim
    if isinstance(body, Box):
        return float(np.sum(np.log(body.hi - body.lo)))
    log_ball = 0.5 * N * math.log(math.pi) - math.lgamma(0.5 * N + 1)
    if isinstance(body, Ball) and body.norm is L2:
        return log_ball + N * math.log(body.radius)
    if isinstance(body, QuadLin) and body.bounded and body.ellipsoid[1] > 0:
        return log_ball + 0.5 * float(np.sum(np.log(body.ellipsoid[1] / body.q)))
    return None


def _sampling_member(body: "Intersection"):
    scored = [(v, i) for i, mb in enumerate(body.members) if (v := _log_volume(mb)) is not None]
    return body.members[min(scored)[1]] if scored else None


# ---------------------------------------------------------------------------
# serialization (used by experiment configs)

def body_to_dict(body: ConvexBody) -> dict:
    if isinstance(body, Ball):
        return {"type": "ball", "center": body.center.tolist(), "radius": body.radius,
                "norm": body.norm.value}
    if isinstance(body, Box):
        return {"type": "box", "lo": body.lo.tolist(), "hi": body.hi.tolist()}
    if isinstance(body, Polytope):
        return {"type": "polytope", "A": body.A.tolist(), "b": body.b.tolist()}
    if isinstance(body, QuadLin):
        return {"type": "quadlin", "q": body.q.tolist(), "a": body.a.tolist(), "r": body.r}
    if isinstance(body, Intersection):
        return {"type": "intersection", "members": [body_to_dict(m) for m in body.members]}
    if isinstance(body, Translate):
        return {"type": "translate", "body": body_to_dict(body.body), "t": body.t.tolist()}
    if isinstance(body, Scale):
        return {"type": "scale", "body": body_to_dict(body.body), "lam": body.lam}
    raise TypeError(f"cannot serialize {type(body).__name__}")


def body_from_dict(d: dict) -> ConvexBody:
    """Inverse of :func:`body_to_dict`.

    Shorthands: ``{"type": "ball", "dim": N}`` is the Euclidean unit ball,
    ``{"type": "cube", "dim": N, "half": h}`` the box ``[-h, h]^N``.
    """
    if not isinstance(d, dict) or "type" not in d:
        raise PreconditionError("body description must be a mapping with a 'type' key")
    kind = str(d["type"]).lower()
    allowed = {
        "ball": {"center", "radius", "norm", "dim"},
        "box": {"lo", "hi"},
        "cube": {"dim", "half"},
        "polytope": {"A", "b"},
        "quadlin": {"q", "a", "r"},
        "intersection": {"members"},
        "translate": {"body", "t"},
        "scale": {"body", "lam"},
    }
    if kind not in allowed:
        raise PreconditionError(f"unknown body type {kind!r}")
    extra = set(d) - allowed[kind] - {"type"}
    if extra:
        raise PreconditionError(f"unknown keys for {kind}: {sorted(extra)}")
    try:
        if kind == "ball":
            if "center" in d:
                center = d["center"]
            else:
                center = np.zeros(int(d["dim"]))
            return Ball(center, float(d.get("radius", 1.0)), AmbientNorm.parse(d.get("norm", "L2")))
        if kind == "box":
            return Box(d["lo"], d["hi"])
        if kind == "cube":
            return Box.cube(int(d["dim"]), float(d.get("half", 1.0)))
        if kind == "polytope":
            return Polytope(d["A"], d["b"])
        if kind == "quadlin":
            return QuadLin(d["q"], d["a"], float(d["r"]))
        if kind == "intersection":
            return Intersection(tuple(body_from_dict(m) for m in d["members"]))
        if kind == "translate":
            return Translate(body_from_dict(d["body"]), d["t"])
        return Scale(body_from_dict(d["body"]), float(d["lam"]))
    except KeyError as exc:
        raise PreconditionError(f"missing key {exc} for body type {kind}") from None
