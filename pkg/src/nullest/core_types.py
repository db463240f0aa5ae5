"""Shared domain types, validation helpers and minimax rate formulas."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np


class NullEstError(Exception):
    """Base class for errors raised by this package."""


class IdentifiabilityError(NullEstError, ValueError):
    """Raised when k >= n/2, where the null location is not identifiable."""


class EstimatorFailure(NullEstError, RuntimeError):
    """Raised when an estimator cannot produce a value (degenerate data, bad scale)."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    """An immutable vector of real z-scores."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float, copy=True).ravel()
        if arr.size < 2:
            raise ValueError(f"a sample needs n >= 2 values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def shifted(self, c: float) -> "Sample":
        return Sample(self.values + c)

    def scaled(self, c: float) -> "Sample":
        return Sample(self.values * c)

    def __len__(self) -> int:
        return self.n


def as_values(sample: Sample | np.ndarray | list) -> np.ndarray:
    """Return the float array behind ``sample`` (accepts raw array-likes too)."""
    if isinstance(sample, Sample):
        return sample.values
    arr = np.asarray(sample, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample values must be finite")
    return arr


@dataclass(frozen=True)
class NullParams:
    theta: float
    sigma2: float

    def __post_init__(self) -> None:
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        if not math.isfinite(self.theta):
            raise ValueError("theta must be finite")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


CONTAMINATION_KINDS = (
    "zero",
    "constant-shift",
    "pi-over-omega",
    "two-sided-blocks",
    "prior-g0",
    "prior-g1",
    "custom",
)


@dataclass(frozen=True)
class ContaminationSpec:
    """Sparsity level ``k`` together with a realized shift vector ``gamma``.

    ``param`` carries the kind's scalar (shift value, frequency, or block
    amplitude).  Builders below produce the deterministic kinds; the random
    prior kinds are realized in :mod:`nullest.sim`.
    """

    k: int
    kind: str
    gamma: np.ndarray
    param: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in CONTAMINATION_KINDS:
            raise ValueError(f"unknown contamination kind {self.kind!r}")
        if self.k < 0:
            raise ValueError("k must be nonnegative")
        g = np.array(self.gamma, dtype=float, copy=True).ravel()
        if not np.all(np.isfinite(g)):
            raise ValueError("gamma must be finite")
        nnz = int(np.count_nonzero(g))
        if nnz > self.k:
            raise ValueError(f"gamma has {nnz} nonzeros but k = {self.k}")
        if self.k > g.size:
            raise ValueError("k cannot exceed the sample size")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return int(self.gamma.size)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.gamma)

    @classmethod
    def zero(cls, n: int) -> "ContaminationSpec":
        return cls(0, "zero", np.zeros(n))

    @classmethod
    def constant_shift(cls, n: int, k: int, value: float) -> "ContaminationSpec":
        g = np.zeros(n)
        g[:k] = value
        return cls(k, "constant-shift", g, float(value))

    @classmethod
    def pi_over_omega(cls, n: int, k: int, omega: float) -> "ContaminationSpec":
        if omega <= 0:
            raise ValueError("omega must be positive")
        g = np.zeros(n)
        g[:k] = math.pi / omega
        return cls(k, "pi-over-omega", g, float(omega))

    @classmethod
    def two_sided_blocks(cls, n: int, k: int, value: float) -> "ContaminationSpec":
        """Split the k shifts into a block at +value and a block at -value."""
        g = np.zeros(n)
        up = (k + 1) // 2
        g[:up] = value
        g[up:k] = -value
        return cls(k, "two-sided-blocks", g, float(value))

    @classmethod
    def custom(cls, gamma, k: int | None = None) -> "ContaminationSpec":
        g = np.asarray(gamma, dtype=float)
        kk = int(np.count_nonzero(g)) if k is None else int(k)
        return cls(kk, "custom", g)


@dataclass(frozen=True)
class Hyperparams:
    """Every tunable constant, with defaults.

    c_tau: frequency cutoff constant for the location estimators.
    c_a: variance window constant, window is [a, 100a].
    C1_pilot, C2_pilot: pilot subset count exponent and size multiplier.
    R: half-width multiplier of the variance interval around the variance estimate.
    c0, Bc: amplitude and cutoff constants of the lower-bound prior pair.
    C1_mode, L_delta: kernel-mode bandwidth constants.
    var_floor_mult: frequencies whose ECF modulus is below
        var_floor_mult * sqrt(log n / n) are dropped from the variance infimum.
    lepski_*: adaptation constants (interval multipliers, grid ratio, C_delta).
    """

    c_tau: float = 0.5
    c_a: float = 0.25
    C1_pilot: float = 1.5
    C2_pilot: float = 2.6
    R: float = 4.0
    c0: float = 1.0 / 24.0
    Bc: float = 3.0
    L_delta: float = 1.0
    C1_mode: float = 2.0
    mu_grid_halfwidth_mult: float = 3.0
    mu_grid_step_mult: float = 0.25
    omega_grid_step_mult: float = 1.0
    m_cap: int = 200_000
    v_grid_points: int = 33
    var_grid_points: int = 512
    var_floor_mult: float = 2.0
    lepski_loc_const: float = 3.0
    lepski_var_const: float = 3.0
    lepski_L: float = 1.0
    lepski_ratio: float = 1.25
    C_delta: float = 2.0

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                if f.name == "R" and val == 0:
                    continue  # degenerate interval is allowed
                raise ValueError(f"hyperparameter {f.name} must be positive, got {val!r}")
        if self.v_grid_points < 17:
            raise ValueError("v_grid_points must be at least 17")
        if self.var_grid_points < 512:
            raise ValueError("var_grid_points must be at least 512")
        if self.lepski_ratio <= 1:
            raise ValueError("lepski_ratio must exceed 1")

    @property
    def c0_in_contract(self) -> bool:
        return self.c0 <= 1.0 / 24.0 + 1e-15

    def with_overrides(self, overrides: Mapping[str, Any]) -> "Hyperparams":
        """Return a copy with string or numeric overrides applied."""
        kinds = {f.name: f.type for f in dataclasses.fields(self)}
        conv: dict[str, Any] = {}
        for key, raw in overrides.items():
            if key not in kinds:
                raise KeyError(f"unknown hyperparameter {key!r}")
            default = getattr(self, key)
            if isinstance(default, int) and not isinstance(default, bool):
                conv[key] = int(raw)
            else:
                conv[key] = _parse_real(raw)
        return dataclasses.replace(self, **conv)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _parse_real(raw: Any) -> float:
    if isinstance(raw, str) and "/" in raw:
        num, den = raw.split("/", 1)
        return float(num) / float(den)
    return float(raw)


@dataclass(frozen=True)
class RatePoint:
    k: int
    n: int
    location_rate_sq: float
    variance_rate: float
    tv_rate: float

    @classmethod
    def at(cls, k: int, n: int) -> "RatePoint":
        return cls(k, n, rate_location_sq(k, n, 1.0), rate_variance(k, n), rate_tv(k, n))


# ---------------------------------------------------------------------------
# Rate formulas
# ---------------------------------------------------------------------------


def check_identifiable(k: int, n: int, *, allow_zero: bool = False) -> None:
    lo = 0 if allow_zero else 1
    if n < 1:
        raise ValueError("n must be positive")
    if k < lo:
        raise ValueError(f"k must be >= {lo}, got {k}")
    if 2 * k >= n:
        raise IdentifiabilityError(f"k = {k} >= n/2 = {n / 2}: location is not identifiable")


def rate_location_sq(k: int, n: int, sigma2: float = 1.0) -> float:
    """Squared minimax location rate, piecewise in k with edges sqrt(n), n/4, n/2 - sqrt(n).

    The last branch is floored at sigma2 (1 v log(e n / (n-2k)^2)), matching the
    mode bandwidth, since the bare log is negative once (n-2k)^2 > e n.
    """
    check_identifiable(k, n)
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    rn = math.sqrt(n)
    if k <= rn:
        return sigma2 / n
    if k <= n / 4:
        return sigma2 * (k * k / (n * n)) / math.log(math.e * k * k / n)
    m = n - 2 * k
    if k <= n / 2 - rn:
        return sigma2 / math.log(math.e * m * m / n)
    return sigma2 * max(1.0, math.log(math.e * n / (m * m)))


def rate_variance(k: int, n: int) -> float:
    """Squared minimax rate for relative variance error."""
    check_identifiable(k, n)
    if k <= math.sqrt(n):
        return 1.0 / n
    return (k * k / (n * n)) / math.log1p(k / math.sqrt(n)) ** 2


def rate_tv(k: int, n: int) -> float:
    check_identifiable(k, n)
    inner = math.log1p(k * k * (n - 2 * k) ** 2 / n**3)
    if inner <= 0:
        return 1.0
    return min(1.0, k / (n * math.sqrt(inner)))


def eps_location(k: int, n: int) -> float:
    """Adaptation rate k / (n sqrt(log(1 + k^2 (n-2k)^2 / n^3))); 1/sqrt(n) at k = 0."""
    if k <= 0:
        return 1.0 / math.sqrt(n)
    inner = math.log1p(k * k * (n - 2 * k) ** 2 / n**3)
    if inner <= 0:
        return math.inf
    return k / (n * math.sqrt(inner))


def eps_variance(k: int, n: int) -> float:
    """k / (n log(1 + k/sqrt(n))); 1/sqrt(n) at k = 0."""
    if k <= 0:
        return 1.0 / math.sqrt(n)
    return k / (n * math.log1p(k / math.sqrt(n)))


def huber_rate(k: int, n: int) -> float:
    """Squared location rate in Huber's model (k = 0 gives the parametric 1/n)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if 2 * k >= n:
        raise IdentifiabilityError(f"k = {k} >= n/2")
    if k <= n / 5:
        return 1.0 / n + k * k / (n * n)
    return math.log(math.e * n / (n - 2 * k))


def huber_modulus(eps: float) -> float:
    """Lower bound on the modulus of continuity; zero when the log argument is <= 1."""
    if not 0 <= eps < 0.5:
        raise ValueError("eps must lie in [0, 1/2)")
    ratio = ((1 - eps) / 2) / (1 - 2 * eps)
    if ratio <= 1:
        return 0.0
    return math.sqrt(2 * math.log(ratio))


# ---------------------------------------------------------------------------
# Total variation between Gaussians
# ---------------------------------------------------------------------------


def _mean_var(p) -> tuple[float, float]:
    if isinstance(p, NullParams):
        return p.theta, p.sigma2
    mu, s2 = p
    if s2 <= 0:
        raise ValueError("variance must be positive")
    return float(mu), float(s2)


def tv_gaussian_surrogate(p, q) -> float:
    """1 ^ max(|s1^2 - s2^2| / max(s1^2, s2^2), |m1 - m2| / max(s1, s2))."""
    m1, v1 = _mean_var(p)
    m2, v2 = _mean_var(q)
    vmax = max(v1, v2)
    scale = abs(v1 - v2) / vmax
    loc = abs(m1 - m2) / math.sqrt(vmax)
    return min(1.0, max(scale, loc))


def tv_gaussian_quadrature(p, q, points: int = 100_000) -> float:
    """Reference TV distance by the trapezoid rule over +-10 sd of both laws."""
    m1, v1 = _mean_var(p)
    m2, v2 = _mean_var(q)
    s1, s2 = math.sqrt(v1), math.sqrt(v2)
    lo = min(m1 - 10 * s1, m2 - 10 * s2)
    hi = max(m1 + 10 * s1, m2 + 10 * s2)
    x = np.linspace(lo, hi, points)
    f1 = np.exp(-0.5 * ((x - m1) / s1) ** 2) / (s1 * math.sqrt(2 * math.pi))
    f2 = np.exp(-0.5 * ((x - m2) / s2) ** 2) / (s2 * math.sqrt(2 * math.pi))
    return 0.5 * float(np.trapezoid(np.abs(f1 - f2), x))
