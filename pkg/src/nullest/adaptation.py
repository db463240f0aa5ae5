"""Lepski-type adaptation to an unknown number of contaminated coordinates."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .core_types import (
    EstimatorFailure,
    Hyperparams,
    NullParams,
    Sample,
    as_values,
    eps_location,
    eps_variance,
    tv_gaussian_surrogate,
)
from .location import estimate_location_unknown_var
from .variance import VarianceWorkspace


@dataclass(frozen=True)
class LepskiTrace:
    k_grid: tuple[int, ...]
    intervals: tuple[tuple[float, float], ...]
    k_prime: int | None
    estimate: float
    fallback_used: bool

    def __post_init__(self) -> None:
        if len(self.k_grid) != len(self.intervals):
            raise ValueError("intervals must align with k_grid")


def thinned_grid(top: int, ratio: float = 1.25) -> list[int]:
    """1, then rounded powers of ``ratio``, then ``top``; sorted and unique."""
    if top < 1:
        raise ValueError("empty k grid")
    if ratio <= 1:
        raise ValueError("ratio must exceed 1")
    ks = {1, top}
    v = 1.0
    while v < top:
        ks.add(int(round(v)))
        v *= ratio
    return sorted(k for k in ks if 1 <= k <= top)


def location_k_top(n: int, hp: Hyperparams) -> int:
    return int(math.floor(n / 2 - hp.C_delta * math.sqrt(n)))


def variance_k_top(n: int) -> int:
    return (n - 1) // 2


def suffix_intersection(intervals: Sequence[tuple[float, float]]) -> tuple[int | None, tuple[float, float] | None]:
    """Smallest index i such that intervals[i:] share a point.

    Intervals are (centre, halfwidth) pairs ordered by increasing k.  Returns
    that index and the common (lo, hi), or (None, None) when even the last
    interval alone is empty.
    """
    lo, hi = -math.inf, math.inf
    best: tuple[int | None, tuple[float, float] | None] = (None, None)
    for i in range(len(intervals) - 1, -1, -1):
        c, w = intervals[i]
        lo, hi = max(lo, c - w), min(hi, c + w)
        if lo > hi:
            break
        best = (i, (lo, hi))
    return best


def _fold(k_grid: list[int], centres: list[float], halfwidths: list[float], fallback: float) -> LepskiTrace:
    intervals = tuple(zip(centres, halfwidths))
    i, common = suffix_intersection(intervals)
    if i is None:
        return LepskiTrace(tuple(k_grid), intervals, None, fallback, True)
    return LepskiTrace(tuple(k_grid), intervals, k_grid[i], 0.5 * (common[0] + common[1]), False)


def _workspace(sample, hp: Hyperparams, seed: int, workspace: VarianceWorkspace | None) -> VarianceWorkspace:
    if workspace is not None:
        return workspace
    return VarianceWorkspace(sample, hp, seed)


def _variance_at(ws: VarianceWorkspace, k: int):
    try:
        return ws.estimate(k)
    except EstimatorFailure:
        return None


def lepski_variance(
    sample: Sample,
    hp: Hyperparams | None = None,
    seed: int = 0,
    *,
    workspace: VarianceWorkspace | None = None,
) -> LepskiTrace:
    """Adaptive variance estimate; falls back to 1 when no suffix intersects.

    A k whose windowed estimate fails (ECF at the noise floor) gets an
    infinitely wide interval, so it never blocks an intersection.
    """
    hp = hp or Hyperparams()
    x = as_values(sample)
    n = x.size
    if n < 8:
        raise ValueError("need n >= 8")
    ws = _workspace(x, hp, seed, workspace)
    ks = thinned_grid(variance_k_top(n), hp.lepski_ratio)
    scale = ws.pilot_sigma2 * hp.lepski_var_const * hp.lepski_L
    centres, widths = [], []
    for k in ks:
        est = _variance_at(ws, k)
        s2 = None if est is None else est.sigma2_hat
        centres.append(0.0 if s2 is None else s2)
        widths.append(math.inf if s2 is None else scale * eps_variance(k, n))
    return _fold(ks, centres, widths, 1.0)


def lepski_location(
    sample: Sample,
    hp: Hyperparams | None = None,
    seed: int = 0,
    *,
    workspace: VarianceWorkspace | None = None,
    workers: int = 1,
) -> LepskiTrace:
    """Adaptive location estimate over a geometric grid of candidate k.

    Per-k estimates run on ``workers`` threads; the intersection fold is
    sequential so the result does not depend on scheduling.
    """
    hp = hp or Hyperparams()
    x = as_values(sample)
    n = x.size
    top = location_k_top(n, hp)
    if top < 1:
        raise ValueError(f"n = {n} too small for the candidate grid")
    ws = _workspace(x, hp, seed, workspace)
    ks = thinned_grid(top, hp.lepski_ratio)
    variances = [_variance_at(ws, k) for k in ks]

    def one(pair):
        k, var = pair
        if var is None:
            return None
        return estimate_location_unknown_var(x, k, hp, seed, variance=var).theta_hat

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            thetas = list(pool.map(one, zip(ks, variances)))
    else:
        thetas = [one(p) for p in zip(ks, variances)]
    scale = hp.lepski_loc_const * math.sqrt(hp.lepski_L) * math.sqrt(ws.pilot_sigma2)
    centres = [0.0 if t is None else t for t in thetas]
    widths = [math.inf if t is None else scale * eps_location(k, n) for k, t in zip(ks, thetas)]
    return _fold(ks, centres, widths, 0.0)


@dataclass(frozen=True)
class AdaptiveReport:
    params: NullParams
    location: LepskiTrace
    variance: LepskiTrace
    tv_proxy: float | None


def adaptive_null_report(
    sample: Sample,
    hp: Hyperparams | None = None,
    seed: int = 0,
    *,
    truth: NullParams | None = None,
    workers: int = 1,
) -> AdaptiveReport:
    hp = hp or Hyperparams()
    x = as_values(sample)
    ws = VarianceWorkspace(x, hp, seed)
    loc = lepski_location(x, hp, seed, workspace=ws, workers=workers)
    var = lepski_variance(x, hp, seed, workspace=ws)
    s2 = var.estimate if var.estimate > 0 else 1.0
    params = NullParams(loc.estimate, s2)
    tv = None if truth is None else tv_gaussian_surrogate(params, truth)
    return AdaptiveReport(params, loc, var, tv)


def adaptive_null_estimate(
    sample: Sample,
    hp: Hyperparams | None = None,
    seed: int = 0,
    *,
    workers: int = 1,
) -> NullParams:
    """N(theta_hat, sigma2_hat) from the two adaptive estimators."""
    return adaptive_null_report(sample, hp, seed, workers=workers).params


__all__ = [
    "AdaptiveReport",
    "LepskiTrace",
    "adaptive_null_estimate",
    "adaptive_null_report",
    "lepski_location",
    "lepski_variance",
    "location_k_top",
    "suffix_intersection",
    "thinned_grid",
]
