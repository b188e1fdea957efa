"""Thin wrapper around scipy's HiGHS linear programming solver."""
from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linprog

from .errors import ConvergenceError


class LPResult(NamedTuple):
    value: float
    x: Optional[np.ndarray]
    status: str  # "optimal" | "unbounded" | "infeasible"


def maximize(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None) -> LPResult:
    """Maximize ``c @ x`` subject to linear constraints (free variables by default)."""
    c = np.asarray(c, dtype=float)
    if bounds is None:
        bounds = [(None, None)] * c.size
    res = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 0:
        return LPResult(float(-res.fun), res.x, "optimal")
    if res.status == 3:
        return LPResult(np.inf, None, "unbounded")
    if res.status == 2:
        return LPResult(-np.inf, None, "infeasible")
    raise ConvergenceError(f"linear program failed: {res.message}")
