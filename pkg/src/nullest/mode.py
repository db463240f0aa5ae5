"""Box-kernel mode estimator with a widening bandwidth, and the sample median."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_types import Hyperparams, Sample, as_values, check_identifiable


@dataclass(frozen=True)
class ModeEstimate:
    theta_hat: float
    h_used: float
    max_count: int


def kernel_mode(sample: Sample, h: float) -> ModeEstimate:
    """Global maximiser of t -> #{j : |t - X_j| <= h}.

    After sorting, a window starting at x[i] holds every point up to
    x[i] + 2h.  The maximiser set is a disjoint union of intervals
    [x[i+c-1] - h, x[i] + h] over the windows i attaining the maximal count
    c; we report the midpoint of the leftmost one.
    """
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    x = np.sort(as_values(sample))
    ends = np.searchsorted(x, x + 2.0 * h, side="right")
    counts = ends - np.arange(x.size)
    i = int(np.argmax(counts))
    c = int(counts[i])
    theta = 0.5 * (x[i] + x[i + c - 1])
    return ModeEstimate(float(theta), float(h), c)


def mode_bandwidth(k: int, n: int, hp: Hyperparams | None = None) -> float:
    """C1 sqrt(1 v log(L_delta n / (n-2k)^2))."""
    hp = hp or Hyperparams()
    check_identifiable(k, n, allow_zero=True)
    ratio = hp.L_delta * n / float(n - 2 * k) ** 2
    return hp.C1_mode * math.sqrt(max(1.0, math.log(ratio)))


def kernel_mode_estimate(sample: Sample, k: int, hp: Hyperparams | None = None, sigma: float = 1.0) -> ModeEstimate:
    """kernel_mode at the bandwidth for (k, n), scaled by the noise level."""
    x = as_values(sample)
    return kernel_mode(x, sigma * mode_bandwidth(k, x.size, hp))


def sample_median(sample) -> float:
    """Lower median: order statistic ceil(n/2), no interpolation."""
    x = as_values(sample)
    r = (x.size + 1) // 2 - 1
    return float(np.partition(x, r)[r])
