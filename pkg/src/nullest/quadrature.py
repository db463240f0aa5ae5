"""Adaptive Simpson quadrature and fixed Gauss-Legendre panels."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .core_types import NullEstError


class QuadratureError(NullEstError, ArithmeticError):
    """Raised when adaptive refinement hits its depth limit.

    ``intervals`` lists the (a, b) subintervals that failed to converge.
    """

    def __init__(self, message: str, intervals: list[tuple[float, float]]):
        super().__init__(f"{message}; unconverged on {intervals[:5]}{' ...' if len(intervals) > 5 else ''}")
        self.intervals = intervals


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-9,
    max_depth: int = 50,
    min_depth: int = 4,
) -> float:
    """Integral of f over [a, b] with the Richardson-corrected Simpson rule.

    Each panel is split until |S_left + S_right - S_whole| <= 15 tol_panel,
    where the tolerance halves at every split.  ``min_depth`` forces a few
    splits first so oscillatory integrands are not accepted on a lucky
    coarse estimate.
    """
    if a == b:
        return 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("limits must be finite")
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    total = 0.0
    failed: list[tuple[float, float]] = []
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        diff = left + right - s
        if depth >= min_depth and abs(diff) <= 15 * eps:
            total += left + right + diff / 15.0
        elif depth >= max_depth:
            failed.append((lo, hi))
            total += left + right
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    if failed:
        raise QuadratureError("adaptive Simpson did not converge", failed)
    return sign * total


@lru_cache(maxsize=16)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def panel_nodes(lo: np.ndarray, hi: np.ndarray, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights for [lo_i, hi_i] split into equal panels.

    Returns arrays of shape (len(lo), panels * order).
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    t, w = _gauss_legendre(order)
    width = (hi - lo) / panels
    starts = lo[:, None] + width[:, None] * np.arange(panels)[None, :]
    nodes = starts[:, :, None] + 0.5 * width[:, None, None] * (t + 1.0)[None, None, :]
    weights = np.broadcast_to(0.5 * width[:, None, None] * w[None, None, :], nodes.shape)
    return nodes.reshape(lo.size, -1), weights.reshape(lo.size, -1)


def simpson_weights(count: int, dx: float) -> np.ndarray:
    """Composite Simpson weights on an odd number of equispaced nodes."""
    if count < 3 or count % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of nodes >= 3")
    w = np.full(count, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * dx / 3.0
