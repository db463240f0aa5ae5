"""Pilot variance, frequency-window variance estimator and the cosine supremum."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_types import EstimatorFailure, Hyperparams, Sample, as_values, check_identifiable
from .ecf import ecf_norm_grid
from .rng import stream

_PILOT_BLOCK = 4096


@dataclass(frozen=True)
class PilotConfig:
    m: int
    ell: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.ell < 2:
            raise ValueError("subset size must be >= 2")

    @classmethod
    def default(cls, n: int, hp: Hyperparams | None = None, seed: int = 0) -> "PilotConfig":
        hp = hp or Hyperparams()
        m = min(math.ceil(n**hp.C1_pilot), hp.m_cap)
        ell = min(n, max(3, math.ceil(hp.C2_pilot * math.log(n))))
        return cls(int(m), int(ell), seed)


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2_hat: float
    a_used: float
    b_used: float
    omega_argmin: float
    pilot_sigma2: float | None = None


def _draw_subsets(rng: np.random.Generator, rows: int, n: int, ell: int) -> np.ndarray:
    """``rows`` index sets of size ``ell`` drawn without replacement."""
    if ell * ell > 2 * n:
        keys = rng.random((rows, n))
        return np.argpartition(keys, ell - 1, axis=1)[:, :ell]
    idx = rng.integers(0, n, size=(rows, ell))
    redo = np.arange(rows)
    while redo.size:
        srt = np.sort(idx[redo], axis=1)
        dup = (np.diff(srt, axis=1) == 0).any(axis=1)
        redo = redo[dup]
        if redo.size:
            idx[redo] = rng.integers(0, n, size=(redo.size, ell))
    return idx


def pilot_variance(sample: Sample, cfg: PilotConfig) -> float:
    """Smallest unbiased sample variance over m random subsets of size ell.

    Subsets are generated in blocks; block b draws from a stream keyed by
    (seed, b) so the result does not depend on evaluation order.
    Zero-variance subsets are skipped; if every subset is constant the data
    are treated as degenerate.
    """
    x = as_values(sample)
    n = x.size
    if cfg.ell > n:
        raise ValueError("subset size exceeds n")
    if cfg.ell == n:
        v = float(np.var(x, ddof=1))
        if v <= 0:
            raise EstimatorFailure("constant data: every subset variance is zero")
        return v
    best = math.inf
    for b, start in enumerate(range(0, cfg.m, _PILOT_BLOCK)):
        rows = min(_PILOT_BLOCK, cfg.m - start)
        rng = stream(cfg.seed, "pilot", b)
        vals = x[_draw_subsets(rng, rows, n, cfg.ell)].var(axis=1, ddof=1)
        vals = vals[vals > 0]
        if vals.size:
            best = min(best, float(vals.min()))
    if not math.isfinite(best):
        raise EstimatorFailure("constant data: every subset variance is zero")
    return best


def variance_frequency_window(sigma_tilde: float, k: int, n: int, hp: Hyperparams | None = None) -> tuple[float, float]:
    """a = c / sigma_tilde * sqrt(1 v log(e k^2 / n)), b = 100 a."""
    hp = hp or Hyperparams()
    if sigma_tilde <= 0:
        raise ValueError("sigma_tilde must be positive")
    kk = max(k, 1)
    a = hp.c_a / sigma_tilde * math.sqrt(max(1.0, math.log(math.e * kk * kk / n)))
    return a, 100.0 * a


def noise_floor(n: int, hp: Hyperparams) -> float:
    """Moduli at or below this are treated as noise and skipped."""
    return max(float(n) ** -2, hp.var_floor_mult * math.sqrt(math.log(n) / n))


class VarianceWorkspace:
    """Shares ECF evaluations between variance windows on one sample.

    Every window [a, 100a] is gridded on the common log lattice
    ``ref * r**j`` (``ref = c_a / sigma_tilde``, ``r = 100**(1/(P-1))``)
    plus its two endpoints.  For k with log(e k^2 / n) <= 1 the window
    starts at ``ref`` and the grid is exactly P log-spaced points; larger k
    shift the window along the same lattice, so moduli computed for one k
    are reused by the next.
    """

    def __init__(self, sample, hp: Hyperparams | None = None, seed: int = 0, pilot_sigma2: float | None = None):
        self.hp = hp or Hyperparams()
        self.x = as_values(sample)
        n = self.x.size
        if n < 8:
            raise ValueError("need n >= 8")
        if pilot_sigma2 is None:
            pilot_sigma2 = pilot_variance(self.x, PilotConfig.default(n, self.hp, seed))
        self.pilot_sigma2 = float(pilot_sigma2)
        self.sigma_tilde = math.sqrt(self.pilot_sigma2)
        self.ref = self.hp.c_a / self.sigma_tilde
        self.log_r = math.log(100.0) / (self.hp.var_grid_points - 1)
        self.floor = noise_floor(n, self.hp)
        self._lattice: dict[int, float] = {}
        self._cache: dict[int, VarianceEstimate] = {}

    def grid(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Frequencies for [a, b] and their lattice labels (-1 for endpoints)."""
        lo = math.ceil(math.log(a / self.ref) / self.log_r - 1e-9)
        hi = math.floor(math.log(b / self.ref) / self.log_r + 1e-9)
        js = np.arange(lo, hi + 1)
        pts = self.ref * np.exp(js * self.log_r)
        inside = (pts > a * (1 + 1e-12)) & (pts < b * (1 - 1e-12))
        w = np.concatenate([[a], pts[inside], [b]])
        labels = np.concatenate([[-1], js[inside], [-1]])
        return w, labels

    def moduli(self, w: np.ndarray, labels: np.ndarray) -> np.ndarray:
        missing = [int(j) for j in labels if j >= 0 and int(j) not in self._lattice]
        if missing:
            vals = ecf_norm_grid(self.x, self.ref * np.exp(np.array(missing) * self.log_r))
            self._lattice.update(zip(missing, vals.tolist()))
        out = np.empty(w.size)
        ends = labels < 0
        out[ends] = ecf_norm_grid(self.x, w[ends])
        out[~ends] = [self._lattice[int(j)] for j in labels[~ends]]
        return out

    def estimate(self, k: int) -> VarianceEstimate:
        kk = max(int(k), 1)
        check_identifiable(kk, self.x.size)
        if kk in self._cache:
            return self._cache[kk]
        a, b = variance_frequency_window(self.sigma_tilde, kk, self.x.size, self.hp)
        w, labels = self.grid(a, b)
        N = self.moduli(w, labels)
        ok = N > self.floor
        if not ok.any():
            raise EstimatorFailure("ecf-degenerate: the ECF modulus is at the noise floor across the window")
        est = -2.0 * np.log(N[ok]) / np.square(w[ok])
        i = int(np.argmin(est))
        res = VarianceEstimate(float(max(est[i], 0.0)), a, b, float(w[ok][i]), self.pilot_sigma2)
        self._cache[kk] = res
        return res


def estimate_variance(
    sample: Sample,
    k: int,
    hp: Hyperparams | None = None,
    seed: int = 0,
    *,
    pilot_sigma2: float | None = None,
) -> VarianceEstimate:
    """inf over a log-spaced grid on [a, 100a] of -2 log N_hat(w) / w^2.

    Frequencies with N_hat at or below the noise floor are skipped; see
    :class:`VarianceWorkspace` for the grid.
    """
    return VarianceWorkspace(sample, hp, seed, pilot_sigma2).estimate(k)


def single_frequency_variance(sample: Sample, omega: float) -> float:
    """-2 log N_hat(omega) / omega^2 at one frequency (requires N_hat > 1/n^2)."""
    if omega == 0:
        raise ValueError("omega must be nonzero")
    x = as_values(sample)
    N = float(ecf_norm_grid(x, [omega])[0])
    if N <= float(x.size) ** -2:
        raise EstimatorFailure("ECF modulus is below 1/n^2 at this frequency")
    return -2.0 * math.log(N) / (omega * omega)


def cosine_supremum(gammas, alpha: float, grid_points: int = 10_000) -> float:
    """max over a uniform grid on [alpha, 100 alpha] of mean_j cos(w gamma_j)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    g = np.asarray(gammas, dtype=float).ravel()
    if g.size == 0:
        raise ValueError("need at least one gamma")
    w = np.linspace(alpha, 100.0 * alpha, grid_points)
    best = -math.inf
    rows = max(1, (1 << 21) // g.size)
    for s in range(0, w.size, rows):
        f = np.cos(np.multiply.outer(w[s : s + rows], g)).mean(axis=1)
        best = max(best, float(f.max()))
    return best
