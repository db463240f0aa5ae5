"""Cai-Jin characteristic-function functionals, used as comparison estimators.

Both functionals can be evaluated on data (through the empirical
characteristic function and central differences) or on a closed-form
characteristic function supplied with its derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core_types import EstimatorFailure, as_values
from .ecf import ecf_grid


@dataclass(frozen=True)
class CaiJinConfig:
    omega_star: float = 1.0
    fd_step: float = 1e-4

    def __post_init__(self) -> None:
        if self.omega_star == 0 or not math.isfinite(self.omega_star):
            raise ValueError("omega_star must be finite and nonzero")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if abs(self.omega_star) < 10 * self.fd_step:
            raise ValueError("|omega_star| must be at least 10 * fd_step")


@dataclass(frozen=True)
class ClosedFormCF:
    """A characteristic function xi(t) and its derivative xi'(t)."""

    xi: Callable[[float], complex]
    dxi: Callable[[float], complex]

    @classmethod
    def gaussian(cls, theta: float, sigma2: float) -> "ClosedFormCF":
        def xi(t):
            return complex(np.exp(1j * t * theta - 0.5 * t * t * sigma2))

        def dxi(t):
            return (1j * theta - t * sigma2) * xi(t)

        return cls(xi, dxi)


def _ecf_pieces(x: np.ndarray, w: float, h: float) -> tuple[complex, complex, float]:
    """psi(w), central-difference psi'(w) and d|psi|/dt at w."""
    vals = ecf_grid(x, [w, w + h, w - h])
    psi = complex(vals[0])
    dpsi = complex((vals[1] - vals[2]) / (2 * h))
    dmod = float((abs(vals[1]) - abs(vals[2])) / (2 * h))
    if abs(psi) <= 1.0 / x.size:
        raise EstimatorFailure(f"|psi_hat({w})| = {abs(psi):.3g} is below 1/n")
    return psi, dpsi, dmod


def _closed_pieces(cf: ClosedFormCF, w: float) -> tuple[complex, complex, float]:
    psi = complex(cf.xi(w))
    dpsi = complex(cf.dxi(w))
    mod = abs(psi)
    if mod == 0:
        raise EstimatorFailure("characteristic function vanishes at omega_star")
    return psi, dpsi, (psi.conjugate() * dpsi).real / mod


def _pieces(source, cfg: CaiJinConfig):
    if isinstance(source, ClosedFormCF):
        return _closed_pieces(source, cfg.omega_star)
    return _ecf_pieces(as_values(source), cfg.omega_star, cfg.fd_step)


def caijin_location(source, cfg: CaiJinConfig | None = None) -> float:
    """Im(conj(xi) xi') / |xi|^2 at omega_star."""
    cfg = cfg or CaiJinConfig()
    psi, dpsi, _ = _pieces(source, cfg)
    return (psi.conjugate() * dpsi).imag / abs(psi) ** 2


def caijin_variance(source, cfg: CaiJinConfig | None = None) -> float:
    """-(d/dt |xi|) / (t |xi|) at omega_star."""
    cfg = cfg or CaiJinConfig()
    psi, _, dmod = _pieces(source, cfg)
    return -dmod / (cfg.omega_star * abs(psi))
