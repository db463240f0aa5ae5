"""Empirical characteristic function and frequency grids.

Trig sums are reduced along a contiguous axis so numpy uses pairwise
summation; conjugate symmetry then holds bit-for-bit because cos is even,
sin is odd and ``(-w) * x == -(w * x)`` in IEEE arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_types import Sample, as_values

# keep each trig block around this many entries
_BLOCK = 1 << 22


@dataclass(frozen=True)
class FrequencyGrid:
    lo: float
    hi: float
    step: float
    points: np.ndarray

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError("lo must not exceed hi")
        if self.step <= 0:
            raise ValueError("step must be positive")
        pts = np.array(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def one_sided(cls, lo: float, hi: float, step: float) -> "FrequencyGrid":
        """Points lo, lo+step, ... strictly below hi, then hi."""
        count = int(math.floor((hi - lo) / step + 1e-9))
        pts = lo + step * np.arange(count + 1)
        pts = pts[pts < hi - 1e-12 * max(1.0, abs(hi))]
        pts = np.append(pts, hi)
        return cls(lo, hi, step, pts)

    @classmethod
    def symmetric(cls, tau: float, step: float) -> "FrequencyGrid":
        """Grid on [-tau, tau] mirrored about 0, containing 0 and +-tau."""
        half = cls.one_sided(0.0, tau, step).points if tau > 0 else np.zeros(1)
        pts = np.concatenate([-half[:0:-1], half])
        return cls(-tau, tau, step, pts)

    @property
    def is_symmetric(self) -> bool:
        return self.lo == -self.hi

    def nonnegative(self) -> np.ndarray:
        return self.points[self.points >= 0]

    def __len__(self) -> int:
        return int(self.points.size)


def ecf_grid(sample, omegas) -> np.ndarray:
    """psi_hat(omega) for every omega in ``omegas`` (complex array)."""
    x = as_values(sample)
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    out = np.empty(w.shape, dtype=complex)
    flat_w = w.ravel()
    flat_out = out.reshape(-1)
    rows = max(1, _BLOCK // max(1, x.size))
    n = x.size
    for s in range(0, flat_w.size, rows):
        ph = np.multiply.outer(flat_w[s : s + rows], x)
        flat_out[s : s + rows] = (np.cos(ph).sum(axis=1) + 1j * np.sin(ph).sum(axis=1)) / n
    return out


def ecf_eval(sample: Sample, omega: float) -> complex:
    """(1/n) sum_j exp(i omega X_j)."""
    return complex(ecf_grid(sample, [omega])[0])


def _centred(x: np.ndarray) -> np.ndarray:
    r = (x.size + 1) // 2 - 1
    return x - np.partition(x, r)[r]


def ecf_norm(sample: Sample, omega: float) -> float:
    """|psi_hat(omega)|, computed on median-centred data.

    The modulus does not depend on a common shift, and centring first keeps
    the phases small so large offsets cost no accuracy.
    """
    return float(ecf_norm_grid(sample, [omega])[0])


def ecf_norm_grid(sample, omegas) -> np.ndarray:
    return np.abs(ecf_grid(_centred(as_values(sample)), omegas))


def default_fd_step(omega: float) -> float:
    return 1e-4 * max(1.0, abs(omega))


def ecf_derivative(sample: Sample, omega: float, h: float | None = None) -> complex:
    """Central difference (psi(w+h) - psi(w-h)) / 2h."""
    if h is None:
        h = default_fd_step(omega)
    if h <= 0:
        raise ValueError("h must be positive")
    pair = ecf_grid(sample, [omega + h, omega - h])
    return complex((pair[0] - pair[1]) / (2 * h))


def ecf_derivative_exact(sample, omega: float) -> complex:
    """Analytic derivative (1/n) sum_j i X_j exp(i omega X_j)."""
    x = as_values(sample)
    ph = omega * x
    return complex(np.mean(1j * x * (np.cos(ph) + 1j * np.sin(ph))))
