"""Fourier min-sup-inf location estimators.

For a candidate centre ``mu`` and a frequency ``w`` the deconvolved,
recentred ECF is ``A(w) = psi_hat(w) exp(-i w mu) / psi_F(w)``.  The inner
problem asks how far ``A(w)`` sits from the disk of centre ``(n-k)/n`` and
radius ``k/n``; the objective is the worst such distance over a finite
symmetric frequency grid, and the estimate is its argmin over a finite
``mu`` grid anchored at the sample median.

The argmin is computed exactly over the grid, but not by brute force: the
objective is Lipschitz in ``mu`` with constant ``max_w |psi_hat(w)/psi_F(w)| |w|``
(the disk residual is 1-Lipschitz), so coarse grid values give lower
bounds on whole cells and hopeless cells are never refined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core_types import (
    EstimatorFailure,
    Hyperparams,
    Sample,
    as_values,
    check_identifiable,
    eps_location,
)
from .ecf import FrequencyGrid, ecf_grid
from .mode import sample_median

_LOG_MULT_MAX = 700.0
_BATCH_CELLS = 1 << 21


# ---------------------------------------------------------------------------
# Inner disk fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiskFitResult:
    residual: float
    zeta_opt: complex
    saturated: bool


def inner_disk_fit(a: complex, k: int, n: int) -> DiskFitResult:
    """Closed-form inf over |zeta| <= 1 of |a - (n-k)/n - (k/n) zeta|."""
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    a = complex(a)
    centre = (n - k) / n
    if k == 0:
        return DiskFitResult(abs(a - 1.0), 0j, abs(a - 1.0) > 0)
    radius = k / n
    d = a - centre
    dist = abs(d)
    z = d / radius
    if abs(z) > 1.0:
        z = z / abs(z)
    residual = max(0.0, dist - radius)
    return DiskFitResult(residual, z, residual > 0)


def disk_residual(values: np.ndarray, k: int, n: int) -> np.ndarray:
    """Vectorised residual of :func:`inner_disk_fit`."""
    centre = (n - k) / n
    radius = k / n
    return np.maximum(np.abs(values - centre) - radius, 0.0)


# ---------------------------------------------------------------------------
# Noise models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Noise law F described through its characteristic function.

    ``log_inv_cf`` returns log(1/|psi_F(w)|) for overflow checks; for
    the built-in kinds ``inv_cf`` is real and positive.
    """

    kind: str
    cf: Callable[[np.ndarray], np.ndarray]
    inv_cf: Callable[[np.ndarray], np.ndarray]
    log_inv_cf: Callable[[np.ndarray], np.ndarray]
    param: float = 1.0

    @classmethod
    def gaussian(cls, v: float = 1.0) -> "NoiseModel":
        if v < 0:
            raise ValueError("variance must be nonnegative")
        return cls(
            "gaussian",
            lambda w: np.exp(-0.5 * v * np.square(w)),
            lambda w: np.exp(0.5 * v * np.square(w)),
            lambda w: 0.5 * v * np.square(w),
            float(v),
        )

    @classmethod
    def laplace(cls, scale: float = 1.0) -> "NoiseModel":
        if scale <= 0:
            raise ValueError("scale must be positive")
        b2 = scale * scale
        return cls(
            "laplace",
            lambda w: 1.0 / (1.0 + b2 * np.square(w)),
            lambda w: 1.0 + b2 * np.square(w),
            lambda w: np.log1p(b2 * np.square(w)),
            float(scale),
        )

    @classmethod
    def custom(cls, cf: Callable[[np.ndarray], np.ndarray]) -> "NoiseModel":
        def inv(w):
            vals = np.asarray(cf(w))
            if np.any(np.abs(vals) < 1e-300):
                raise EstimatorFailure("noise characteristic function vanishes on the grid")
            return 1.0 / vals

        def log_inv(w):
            with np.errstate(divide="ignore"):
                return -np.log(np.abs(np.asarray(cf(w))))

        return cls("custom", cf, inv, log_inv)

    def multiplier(self, omegas: np.ndarray) -> np.ndarray:
        """1/psi_F on ``omegas``; a multiplier above e^700 is a hard error."""
        w = np.asarray(omegas, dtype=float)
        logs = np.asarray(self.log_inv_cf(w), dtype=float)
        if np.any(~np.isfinite(logs)) or np.any(logs > _LOG_MULT_MAX):
            raise EstimatorFailure(
                f"inverse noise cf exceeds e^{_LOG_MULT_MAX:g} on the grid (tau too large)"
            )
        return self.inv_cf(w)


# ---------------------------------------------------------------------------
# Grids and tuning
# ---------------------------------------------------------------------------


def tau_known_var(k: int, n: int, hp: Hyperparams | None = None) -> float:
    """1 v c sqrt(log(1 + k^2 (n-2k)^2 / n^3)) at unit noise scale."""
    hp = hp or Hyperparams()
    inner = math.log1p(k * k * float(n - 2 * k) ** 2 / float(n) ** 3)
    return max(1.0, hp.c_tau * math.sqrt(max(inner, 0.0)))


def laplace_tau(k: int, n: int, const: float = 1.0) -> float:
    """tau with tau^2 = const * k (n-2k) / n^(3/2), floored at 1."""
    return max(1.0, math.sqrt(const * k * (n - 2 * k) / n**1.5))


def omega_step(n: int, hp: Hyperparams, scale: float = 1.0) -> float:
    return hp.omega_grid_step_mult / (scale * math.sqrt(n * math.log(n)))


def omega_grid(tau: float, n: int, hp: Hyperparams, scale: float = 1.0) -> FrequencyGrid:
    return FrequencyGrid.symmetric(tau, omega_step(n, hp, scale))


@dataclass(frozen=True)
class MuGrid:
    """Points centre + j*step for j = -half_count..half_count."""

    centre: float
    step: float
    half_count: int

    @property
    def points(self) -> np.ndarray:
        return self.centre + self.step * np.arange(-self.half_count, self.half_count + 1)

    def __len__(self) -> int:
        return 2 * self.half_count + 1


def mu_grid(centre: float, sigma: float, k: int, n: int, hp: Hyperparams) -> MuGrid:
    half = hp.mu_grid_halfwidth_mult * sigma * math.sqrt(math.log(n))
    step = hp.mu_grid_step_mult * sigma * eps_location(k, n)
    if not math.isfinite(step) or step <= 0:
        raise EstimatorFailure("degenerate mu-grid step")
    return MuGrid(centre, step, int(math.floor(half / step + 1e-9)))


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------


def _sup_residual(weighted: np.ndarray, omegas: np.ndarray, mus: np.ndarray, k: int, n: int) -> np.ndarray:
    """max over omegas of the disk residual of weighted * exp(-i w mu), for each mu."""
    out = np.empty(mus.size)
    cols = max(1, _BATCH_CELLS // max(1, omegas.size))
    centre = (n - k) / n
    radius = k / n
    wr = weighted.real[:, None]
    wi = weighted.imag[:, None]
    for s in range(0, mus.size, cols):
        ph = np.multiply.outer(omegas, mus[s : s + cols])
        c = np.cos(ph)
        sn = np.sin(ph)
        # weighted * (c - i sn)
        re = wr * c + wi * sn - centre
        im = wi * c - wr * sn
        d = np.hypot(re, im)
        out[s : s + cols] = np.maximum(d.max(axis=0) - radius, 0.0)
    return out


def objective(
    sample,
    mu: float,
    v: float,
    k: int,
    grid: FrequencyGrid,
    noise: NoiseModel | None = None,
) -> float:
    """sup over grid points of the disk residual of A(w).

    ``noise`` defaults to Gaussian with variance ``v``; when a non-Gaussian
    model is supplied ``v`` is ignored.
    """
    x = as_values(sample)
    n = x.size
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    if v < 0:
        raise ValueError("v must be nonnegative")
    noise = noise or NoiseModel.gaussian(v)
    w = grid.points
    weighted = ecf_grid(x, w) * noise.multiplier(w)
    return float(_sup_residual(weighted, w, np.array([float(mu)]), k, n)[0])


# ---------------------------------------------------------------------------
# Fast kernels on a frequency lattice
# ---------------------------------------------------------------------------
#
# The estimators use the nonnegative half of the symmetric grid, i.e. the
# lattice 0, d, 2d, ... below tau followed by tau itself.  Writing
# exp(i (j0 + t) d x) = exp(i j0 d x) exp(i t d x) turns the ECF on the
# lattice into complex matrix-vector products, and the phase factors
# exp(-i w mu) into elementwise products, so only O(sqrt(L)) trig calls per
# data point (or per mu) are needed instead of O(L).


def _block(length: int) -> int:
    return max(1, int(math.ceil(math.sqrt(length))))


def _expi(arg: np.ndarray) -> np.ndarray:
    return np.cos(arg) + 1j * np.sin(arg)


def _lattice_ecf(x: np.ndarray, step: float, count: int) -> np.ndarray:
    """psi_hat(j * step) for j < count."""
    B = _block(count)
    offs = _expi(np.multiply.outer(step * np.arange(B), x))  # (B, n)
    out = np.empty(count, dtype=complex)
    for j0 in range(0, count, B):
        anchor = _expi((step * j0) * x)
        seg = offs[: min(B, count - j0)] @ anchor
        out[j0 : j0 + seg.size] = seg / x.size
    return out


def _lattice_phases(step: float, count: int, tau: float, mus: np.ndarray) -> np.ndarray:
    """exp(-i w mu) for w in (lattice..., tau), shape (count + 1, len(mus))."""
    B = _block(count)
    offs = _expi(-np.multiply.outer(step * np.arange(B), mus))  # (B, P)
    nb = -(-count // B)
    anchors = _expi(-np.multiply.outer(step * B * np.arange(nb), mus))  # (nb, P)
    out = np.empty((count + 1, mus.size), dtype=complex)
    full = (anchors[:, None, :] * offs[None, :, :]).reshape(nb * B, mus.size)
    out[:count] = full[:count]
    out[count] = _expi(-tau * mus)
    return out


@dataclass
class _Lattice:
    step: float
    count: int
    tau: float

    @property
    def omegas(self) -> np.ndarray:
        return np.append(self.step * np.arange(self.count), self.tau)

    @classmethod
    def build(cls, tau: float, step: float) -> "_Lattice":
        count = int(math.floor(tau / step + 1e-9)) + 1
        while count > 1 and (count - 1) * step >= tau * (1 - 1e-12):
            count -= 1
        return cls(step, count, tau)


class _PairObjective:
    """Objective values at (mu index, noise index) pairs."""

    def __init__(self, x, lat: _Lattice, weights: np.ndarray, mus: np.ndarray, k: int, n: int):
        self.lat = lat
        self.weights = weights  # (count + 1, n_noise)
        self.mus = mus
        self.centre = (n - k) / n
        self.radius = k / n

    def __call__(self, js: np.ndarray, vs: np.ndarray) -> np.ndarray:
        out = np.empty(js.size)
        cols = max(1, _BATCH_CELLS // (self.lat.count + 1))
        for s in range(0, js.size, cols):
            jj = js[s : s + cols]
            ph = _lattice_phases(self.lat.step, self.lat.count, self.lat.tau, self.mus[jj])
            a = self.weights[:, vs[s : s + cols]] * ph
            d = np.hypot(a.real - self.centre, a.imag)
            out[s : s + cols] = np.maximum(d.max(axis=0) - self.radius, 0.0)
        return out


# ---------------------------------------------------------------------------
# Exact grid argmin
# ---------------------------------------------------------------------------


def _coarse_stride(size: int, target: int) -> int:
    s = 1
    while s * 2 * target <= size:
        s *= 2
    return s


def _axis_points(size: int, stride: int) -> np.ndarray:
    idx = np.arange(0, size, stride)
    if idx[-1] != size - 1:
        idx = np.append(idx, size - 1)
    return idx


def _branch_and_bound(evaluate, nj: int, ni: int, lip_j: float, lip_i: float):
    """Minimise f over the index box [0, nj) x [0, ni).

    ``lip_j`` and ``lip_i`` bound the change of f per unit index step in each
    coordinate.  Returns (best, js, is) listing every evaluated point whose
    value equals the minimum; unevaluated points are certified to be
    strictly worse.
    """
    vals = np.full((nj, ni), np.inf)
    done = np.zeros((nj, ni), dtype=bool)
    sj = _coarse_stride(nj, 48)
    si = _coarse_stride(ni, 2)
    gj, gi = np.meshgrid(_axis_points(nj, sj), _axis_points(ni, si), indexing="ij")
    aj, ai = gj.ravel(), gi.ravel()
    vals[aj, ai] = evaluate(aj, ai)
    done[aj, ai] = True
    best = float(vals[aj, ai].min())
    while sj > 1 or si > 1:
        rj = sj / 2 if sj > 1 else 0.0
        ri = si / 2 if si > 1 else 0.0
        slack = (lip_j * rj + lip_i * ri) * (1 + 1e-9) + 1e-12
        keep = vals[aj, ai] - slack <= best
        aj, ai = aj[keep], ai[keep]
        if aj.size == 0:
            break
        nsj, nsi = max(1, sj // 2), max(1, si // 2)
        dj = (-nsj, 0, nsj) if sj > 1 else (0,)
        di = (-nsi, 0, nsi) if si > 1 else (0,)
        kj = np.concatenate([aj + a for a in dj for _ in di])
        ki = np.concatenate([ai + b for _ in dj for b in di])
        ok = (kj >= 0) & (kj < nj) & (ki >= 0) & (ki < ni)
        code = np.unique(kj[ok] * ni + ki[ok])
        kj, ki = code // ni, code % ni
        fresh = ~done[kj, ki]
        if fresh.any():
            vals[kj[fresh], ki[fresh]] = evaluate(kj[fresh], ki[fresh])
            done[kj[fresh], ki[fresh]] = True
            best = min(best, float(vals[kj[fresh], ki[fresh]].min()))
        aj, ai = kj, ki
        sj, si = nsj, nsi
    hit_j, hit_i = np.nonzero(done & (vals == best))
    return best, hit_j, hit_i


def _grid_argmin(
    x: np.ndarray,
    k: int,
    lat: _Lattice,
    noises: Sequence[NoiseModel],
    grid: MuGrid,
) -> tuple[int, int, float]:
    """Exact argmin over (mu index, noise index).

    Noise models must be ordered so that the objective is Lipschitz in the
    noise index (Gaussian variances in increasing order).  Ties go to the mu
    closest to the grid centre, then the lower mu, then the lower index.
    """
    n = x.size
    w = lat.omegas
    psi = np.append(_lattice_ecf(x, lat.step, lat.count), ecf_grid(x, [lat.tau])[0])
    mults = np.stack([nm.multiplier(w) for nm in noises], axis=1)  # (L, V)
    weights = psi[:, None] * mults
    lip_mu = float(np.max(np.abs(weights) * w[:, None])) * grid.step
    if len(noises) > 1:
        lip_v = float(np.max(np.abs(weights[:, 1:] - weights[:, :-1])))
    else:
        lip_v = 0.0
    evaluate = _PairObjective(x, lat, weights, grid.points, k, n)
    best, hj, hi = _branch_and_bound(evaluate, len(grid), len(noises), lip_mu, lip_v)
    order = np.lexsort((hi, hj, np.abs(hj - grid.half_count)))
    pick = order[0]
    return int(hj[pick]), int(hi[pick]), best


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocationEstimate:
    theta_hat: float
    v_hat: float | None
    objective_value: float
    mu_grid_used: MuGrid
    tau_used: float
    k: int
    sigma2_hat: float | None = None
    pilot_sigma2: float | None = None
    v_interval: tuple[float, float] | None = None


def _check_k(k: int, n: int) -> None:
    if n < 4:
        raise ValueError("need n >= 4")
    check_identifiable(k, n, allow_zero=True)


def _run_location(
    x: np.ndarray,
    k: int,
    tau: float,
    grid: MuGrid,
    noises: Sequence[NoiseModel],
    hp: Hyperparams,
    scale: float,
):
    lat = _Lattice.build(tau, omega_step(x.size, hp, scale))
    return _grid_argmin(x, k, lat, noises, grid)


def estimate_location_known_var(
    sample: Sample,
    k: int,
    sigma2: float,
    hp: Hyperparams | None = None,
    rng_seed=None,
) -> LocationEstimate:
    """Location estimate when the noise variance ``sigma2`` is known.

    The frequency cutoff and grid spacing are expressed in units of
    1/sigma so the estimator is scale equivariant.  ``rng_seed`` is
    accepted for interface symmetry; the computation is deterministic.
    """
    hp = hp or Hyperparams()
    x = as_values(sample)
    n = x.size
    _check_k(k, n)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    sigma = math.sqrt(sigma2)
    tau = tau_known_var(k, n, hp) / sigma
    grid = mu_grid(sample_median(x), sigma, k, n, hp)
    j, _, val = _run_location(x, k, tau, grid, [NoiseModel.gaussian(sigma2)], hp, sigma)
    return LocationEstimate(float(grid.points[j]), None, val, grid, tau, k)


def sigma_interval(sigma2_hat: float, k: int, n: int, hp: Hyperparams | None = None) -> tuple[float, float]:
    """sigma2_hat * (1 -+ R k / (n log(1 + k/sqrt(n)))), lower end floored."""
    hp = hp or Hyperparams()
    if sigma2_hat <= 0:
        raise ValueError("sigma2_hat must be positive")
    if k <= 0:
        width = 0.0
    else:
        width = hp.R * k / (n * math.log1p(k / math.sqrt(n)))
    lo = max(sigma2_hat * (1 - width), 1e-12 * sigma2_hat)
    return lo, sigma2_hat * (1 + width)


def _noiseless_location(x: np.ndarray, k: int, hp: Hyperparams, pilot: float | None = None) -> LocationEstimate:
    """Zero fitted variance: v = 0 on unit-scale grids."""
    n = x.size
    tau = tau_known_var(k, n, hp)
    grid = mu_grid(sample_median(x), 1.0, k, n, hp)
    j, _, val = _run_location(x, k, tau, grid, [NoiseModel.gaussian(0.0)], hp, 1.0)
    return LocationEstimate(
        float(grid.points[j]), 0.0, val, grid, tau, k, sigma2_hat=0.0, pilot_sigma2=pilot, v_interval=(0.0, 0.0)
    )


def estimate_location_unknown_var(
    sample: Sample,
    k: int,
    hp: Hyperparams | None = None,
    rng_seed: int = 0,
    *,
    pilot_sigma2: float | None = None,
    variance=None,
) -> LocationEstimate:
    """Joint grid minimisation over mu and v in the variance interval.

    ``pilot_sigma2`` and ``variance`` (a :class:`VarianceEstimate`) may be
    supplied to reuse work across calls on the same sample.
    """
    from .variance import estimate_variance

    hp = hp or Hyperparams()
    x = as_values(sample)
    n = x.size
    _check_k(k, n)
    if variance is None and np.ptp(x) == 0:
        return _noiseless_location(x, k, hp)
    if variance is None:
        variance = estimate_variance(x, max(k, 1), hp, rng_seed, pilot_sigma2=pilot_sigma2)
    s2 = variance.sigma2_hat
    if s2 <= 0:
        return _noiseless_location(x, k, hp, variance.pilot_sigma2)
    sig = math.sqrt(s2)
    lo, hi = sigma_interval(s2, k, n, hp)
    vs = np.linspace(lo, hi, hp.v_grid_points)
    if hi == lo:
        vs = np.full(hp.v_grid_points, s2)
    tau = tau_known_var(k, n, hp) / sig
    grid = mu_grid(sample_median(x), sig, k, n, hp)
    noises = [NoiseModel.gaussian(float(v)) for v in vs]
    j, vi, val = _run_location(x, k, tau, grid, noises, hp, sig)
    return LocationEstimate(
        float(grid.points[j]),
        float(vs[vi]),
        val,
        grid,
        tau,
        k,
        sigma2_hat=s2,
        pilot_sigma2=variance.pilot_sigma2,
        v_interval=(lo, hi),
    )


def estimate_location_general(
    sample: Sample,
    k: int,
    noise: NoiseModel,
    tau: float,
    hp: Hyperparams | None = None,
) -> LocationEstimate:
    """Deconvolution variant for a known noise law at unit scale."""
    hp = hp or Hyperparams()
    x = as_values(sample)
    n = x.size
    _check_k(k, n)
    if tau <= 0:
        raise ValueError("tau must be positive")
    grid = mu_grid(sample_median(x), 1.0, k, n, hp)
    j, _, val = _run_location(x, k, tau, grid, [noise], hp, 1.0)
    return LocationEstimate(float(grid.points[j]), None, val, grid, tau, k)
