"""Numerical checks of the two-point lower-bound constructions.

Three objects are built here:

* the heavy-tailed density p0 and its perturbation p1 = p0 + Delta, where
  Delta is the inverse Fourier transform of an odd, purely imaginary h
  supported on [-2 tau, 2 tau];
* the mixture pair f0, f1 whose characteristic functions agree on
  (-tau, tau);
* the two-block prior used for the inconsistency-regime lower bound.

Delta on large grids uses the closed-form sine integrals; ``delta_eval``
computes the same quantity by adaptive Simpson quadrature, and the two are
cross-checked in the tests and in the acceptance run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .core_types import Hyperparams, NullParams, Sample
from .quadrature import adaptive_simpson, panel_nodes, simpson_weights
from .rng import stream

_SQRT2PI = math.sqrt(2.0 * math.pi)
_CONV_HALF = 12.0  # phi(12) ~ 1e-32
_CONV_PANELS = 24
_CONV_ORDER = 32
_CONV_CHUNK = 512


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT2PI


@dataclass(frozen=True)
class PriorConstruction:
    eps: float
    lam: float
    tau: float
    mu: float
    c0: float
    Bc: float
    n: int

    def __post_init__(self) -> None:
        if not 0 < self.eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
        if not 0 < self.lam <= 0.5:
            raise ValueError("lambda must lie in (0, 1/2]")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.mu <= 0:
            raise ValueError("mu must be positive")

    @classmethod
    def from_eps(cls, eps: float, n: int, c0: float = 1 / 24, Bc: float = 3.0) -> "PriorConstruction":
        if not 0 < eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")
        if n < 1:
            raise ValueError("n must be positive")
        if c0 <= 0 or Bc <= 0:
            raise ValueError("c0 and Bc must be positive")
        lam = eps / (1 + 2 * eps)
        arg = math.e * n * eps**2 * (1 - 2 * eps) ** 2
        tau = 1.0 if arg <= 1 else max(1.0, Bc * math.sqrt(math.log(arg)))
        return cls(eps, lam, tau, c0 * lam / tau, c0, Bc, n)

    @classmethod
    def from_hyperparams(cls, eps: float, n: int, hp: Hyperparams) -> "PriorConstruction":
        return cls.from_eps(eps, n, hp.c0, hp.Bc)

    @property
    def amp(self) -> float:
        """(1 - lambda) / lambda."""
        return (1 - self.lam) / self.lam

    @property
    def in_contract(self) -> bool:
        return self.c0 <= 1 / 24


# ---------------------------------------------------------------------------
# p0, Delta and p1
# ---------------------------------------------------------------------------


def p0_density(x, tau: float):
    """tau/4 on |x| <= 1/tau and 1/(4 tau x^2) outside."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    xa = np.abs(np.asarray(x, dtype=float))
    inner = xa <= 1.0 / tau
    with np.errstate(divide="ignore"):
        out = np.where(inner, tau / 4.0, 1.0 / (4.0 * tau * np.where(inner, 1.0, xa) ** 2))
    return float(out) if out.ndim == 0 else out


def p0_cdf(x, tau: float):
    x = np.asarray(x, dtype=float)
    b = 1.0 / tau
    with np.errstate(divide="ignore"):
        left = 1.0 / (4.0 * tau * np.abs(np.minimum(x, -b)))
        right = 1.0 - 1.0 / (4.0 * tau * np.maximum(x, b))
    out = np.where(x < -b, left, np.where(x > b, right, 0.25 + 0.25 * tau * (x + b)))
    return float(out) if out.ndim == 0 else out


def p0_quantile(u, tau: float):
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("quantile levels must lie in (0, 1)")
    with np.errstate(divide="ignore"):
        lo = -1.0 / (4.0 * tau * u)
        hi = 1.0 / (4.0 * tau * (1.0 - u))
    return np.where(u < 0.25, lo, np.where(u > 0.75, hi, (4.0 * u - 2.0) / tau))


def h_imag(t, pc: PriorConstruction):
    """Im h(t) for t >= 0: 2A sin(mu t) on [0, tau), the linear taper on [tau, 2tau]."""
    t = np.asarray(t, dtype=float)
    A = pc.amp
    core = 2 * A * np.sin(pc.mu * t)
    taper = 2 * A * math.sin(pc.tau * pc.mu) * (2 * pc.tau - t) / pc.tau
    out = np.where(t < pc.tau, core, np.where(t <= 2 * pc.tau, taper, 0.0))
    return float(out) if out.ndim == 0 else out


def _sin_over(a: np.ndarray, tau: float) -> np.ndarray:
    """sin(a tau) / a, equal to tau at a = 0."""
    return tau * np.sinc(a * tau / math.pi)


def _taper_integral(x: np.ndarray, tau: float) -> np.ndarray:
    """int_tau^{2tau} (2tau - t) sin(x t) dt, with a series near x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) * tau < 1e-2
    xs = np.where(small, 1.0, x)
    direct = tau * np.cos(tau * xs) / xs + (np.sin(tau * xs) - np.sin(2 * tau * xs)) / xs**2
    # int (2tau - t) t^p dt over [tau, 2tau] = tau^{p+2} c_p
    series = np.zeros_like(x)
    for m in range(4):
        p = 2 * m + 1
        c = 2 * (2 ** (p + 1) - 1) / (p + 1) - (2 ** (p + 2) - 1) / (p + 2)
        series += (-1) ** m * x**p * tau ** (p + 2) * c / math.factorial(p)
    return np.where(small, series, direct)


def delta_closed(x, pc: PriorConstruction):
    """Delta(x) from the closed-form sine integrals (vectorised)."""
    x = np.asarray(x, dtype=float)
    A, tau, mu = pc.amp, pc.tau, pc.mu
    core = 0.5 * (_sin_over(x - mu, tau) - _sin_over(x + mu, tau))
    taper = math.sin(tau * mu) / tau * _taper_integral(x, tau)
    out = -(2 * A / math.pi) * (core + taper)
    return float(out) if out.ndim == 0 else out


def delta_eval(x: float, pc: PriorConstruction, quad_tol: float = 1e-9) -> float:
    """Delta(x) = -(1/pi) int_0^{2tau} Im h(t) sin(t x) dt by adaptive Simpson."""
    if quad_tol > 1e-8:
        raise ValueError("quad_tol must be <= 1e-8")
    x = float(x)
    if x == 0:
        return 0.0
    A, tau, mu = pc.amp, pc.tau, pc.mu
    s = math.sin(tau * mu)

    def core(t):
        return 2 * A * math.sin(mu * t) * math.sin(t * x)

    def taper(t):
        return 2 * A * s * (2 * tau - t) / tau * math.sin(t * x)

    # split so each panel holds a bounded number of oscillations
    pieces = max(1, math.ceil(abs(x) * tau / math.pi))
    tol = 0.5 * quad_tol / pieces
    total = 0.0
    for lo, hi, fn in ((0.0, tau, core), (tau, 2 * tau, taper)):
        edges = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            total += adaptive_simpson(fn, float(a), float(b), tol)
    return -total / math.pi


def p1_density(x, pc: PriorConstruction):
    out = np.asarray(p0_density(x, pc.tau)) + np.asarray(delta_closed(x, pc))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DensityGrid:
    xs: np.ndarray
    values: np.ndarray
    quadrature: str = "simpson"

    def __post_init__(self) -> None:
        if self.quadrature not in ("trapezoid", "simpson"):
            raise ValueError("quadrature must be 'trapezoid' or 'simpson'")
        if self.xs.shape != self.values.shape:
            raise ValueError("xs and values must align")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def integrate(self, values: np.ndarray | None = None) -> float:
        v = self.values if values is None else values
        if self.quadrature == "trapezoid":
            return float(np.trapezoid(v, self.xs))
        dx = self.xs[1] - self.xs[0]
        return float(simpson_weights(self.xs.size, dx) @ v)


def p1_grid(pc: PriorConstruction, mass_tol: float = 1e-4, per_inner: int = 20) -> DensityGrid:
    """Simpson grid for p1 with +-1/tau on panel boundaries.

    The half-width M is chosen so the p0 mass outside [-M, M], which is
    1/(2 tau M), is mass_tol / 2.
    """
    if per_inner % 2:
        raise ValueError("per_inner must be even")
    half = per_inner * math.ceil(1.0 / (0.5 * mass_tol))  # nodes per side, multiple of per_inner
    dx = 1.0 / (pc.tau * per_inner)
    xs = np.arange(-half, half + 1) * dx
    return DensityGrid(xs, p1_density(xs, pc), "simpson")


@dataclass(frozen=True)
class P1Report:
    min_p1: float
    integral_p1: float
    integral_delta: float
    tail_mass: float
    passed: bool
    failures: tuple[str, ...] = ()


def verify_p1(pc: PriorConstruction, grid: DensityGrid | None = None) -> P1Report:
    """Nonnegativity and normalisation of p1 on a grid.

    ``integral_p1`` adds back the p0 mass beyond the grid, which is known in
    closed form.
    """
    grid = grid or p1_grid(pc)
    M = float(min(-grid.xs[0], grid.xs[-1]))
    tail = 1.0 / (2.0 * pc.tau * M)
    p0 = p0_density(grid.xs, pc.tau)
    delta = grid.values - p0
    int_p1 = grid.integrate() + tail
    int_delta = grid.integrate(delta)
    min_p1 = float(grid.values.min())
    failures = []
    if min_p1 < -1e-8:
        failures.append("min_p1")
    if abs(int_p1 - 1.0) > 1e-4:
        failures.append("integral_p1")
    if abs(int_delta) > 1e-5:
        failures.append("integral_delta")
    return P1Report(min_p1, int_p1, int_delta, tail, not failures, tuple(failures))


# ---------------------------------------------------------------------------
# Mixture pair
# ---------------------------------------------------------------------------


def _convolve_phi(fn, x: np.ndarray, lo_clip: float = -math.inf) -> np.ndarray:
    """(fn * phi)(x) restricted to y >= lo_clip, by Gauss-Legendre panels."""
    out = np.empty(x.size)
    for s in range(0, x.size, _CONV_CHUNK):
        xc = x[s : s + _CONV_CHUNK]
        lo = np.maximum(xc - _CONV_HALF, lo_clip)
        hi = np.maximum(xc + _CONV_HALF, lo_clip)
        y, w = panel_nodes(lo, hi, _CONV_PANELS, _CONV_ORDER)
        out[s : s + _CONV_CHUNK] = np.sum(w * fn(y) * _phi(xc[:, None] - y), axis=1)
    return out


def p0_conv_phi(x, tau: float) -> np.ndarray:
    """(p0 * phi)(x): closed form on the plateau plus quadrature on the tails."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    b = 1.0 / tau
    plateau = 0.25 * tau * (ndtr(x + b) - ndtr(x - b))

    def tail(y):
        return 1.0 / (4.0 * tau * y * y)

    right = _convolve_phi(tail, x, b)
    left = _convolve_phi(tail, -x, b)
    return plateau + right + left


def delta_conv_phi(x, pc: PriorConstruction) -> np.ndarray:
    """(Delta * phi)(x) by direct quadrature of the convolution."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _convolve_phi(lambda y: delta_closed(y, pc), x)


def delta_conv_phi_fourier(x, pc: PriorConstruction) -> np.ndarray:
    """Oracle: -(1/pi) int_0^{2tau} Im h(t) exp(-t^2/2) sin(t x) dt."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t, w = panel_nodes(np.array([0.0, pc.tau]), np.array([pc.tau, 2 * pc.tau]), 64, 32)
    t, w = t.ravel(), w.ravel()
    g = h_imag(t, pc) * np.exp(-0.5 * t * t) * w
    return -(np.sin(np.multiply.outer(x, t)) @ g) / math.pi


def mixture_grid(pc: PriorConstruction, points: int = 1 << 14) -> np.ndarray:
    L = 20.0 + 100.0 / pc.tau
    return np.linspace(-L, L, points)


def mixture_densities(x, pc: PriorConstruction) -> tuple[np.ndarray, np.ndarray]:
    """f0(x) and f1(x) for the matched pair."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    eps, mu = pc.eps, pc.mu
    w_null, w_atom, w_cont = 1 - eps, 2 * eps * eps, eps * (1 - 2 * eps)
    f0 = w_null * _phi(x) + w_atom * _phi(x - 2 * mu)
    f1 = w_null * _phi(x - 2 * mu) + w_atom * _phi(x)
    if w_cont > 0:
        P = p0_conv_phi(x - mu, pc.tau)
        D = delta_conv_phi(x - mu, pc)
        f0 = f0 + w_cont * P
        f1 = f1 + w_cont * (P + D)
    return f0, f1


@dataclass(frozen=True)
class MixturePair:
    pc: PriorConstruction
    xs: np.ndarray
    f0: np.ndarray
    f1: np.ndarray

    @property
    def tail_mass(self) -> float:
        """Mass of the contaminated component beyond the grid (p0 tail)."""
        L = float(self.xs[-1])
        return self.pc.eps * (1 - 2 * self.pc.eps) / (2 * self.pc.tau * L)

    def integrals(self) -> tuple[float, float]:
        return (
            float(np.trapezoid(self.f0, self.xs)) + self.tail_mass,
            float(np.trapezoid(self.f1, self.xs)) + self.tail_mass,
        )

    def cf_difference(self, ts) -> np.ndarray:
        """|f1_hat(t) - f0_hat(t)| by the trapezoid rule on the grid."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        d = self.f1 - self.f0
        out = np.empty(ts.size)
        for i, t in enumerate(ts):
            ph = t * self.xs
            re = np.trapezoid(d * np.cos(ph), self.xs)
            im = np.trapezoid(d * np.sin(ph), self.xs)
            out[i] = math.hypot(re, im)
        return out

    def cf_match_max(self, frac: float = 0.99, count: int = 256) -> float:
        ts = np.linspace(-frac * self.pc.tau, frac * self.pc.tau, count)
        return float(self.cf_difference(ts).max())

    def chi2(self) -> float:
        d = self.f1 - self.f0
        # both densities underflow together in the Gaussian-only case
        safe = np.where(self.f0 > 0, self.f0, 1.0)
        return float(np.trapezoid(np.where(self.f0 > 0, d * d / safe, 0.0), self.xs))

    def cdf(self, arm: int, x) -> np.ndarray:
        """Mixture CDF from the cumulative trapezoid plus the left p0 tail."""
        f = self.f0 if arm == 0 else self.f1
        dx = np.diff(self.xs)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * dx * (f[1:] + f[:-1]))])
        cum += 0.5 * self.tail_mass
        return np.interp(x, self.xs, cum, left=0.0, right=1.0)


def build_mixture_pair(pc: PriorConstruction, points: int = 1 << 14) -> MixturePair:
    xs = mixture_grid(pc, points)
    f0, f1 = mixture_densities(xs, pc)
    return MixturePair(pc, xs, f0, f1)


@dataclass(frozen=True)
class LowerBoundReport:
    eps: float
    n: int
    tau: float
    lam: float
    mu: float
    c0: float
    Bc: float
    min_p1: float
    integral_p1: float
    integral_delta: float
    cf_match_max: float
    chi2_estimate: float
    integral_f0: float
    integral_f1: float
    delta_crosscheck: float
    in_contract: bool
    failures: tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        keys = (
            "eps", "n", "tau", "lam", "mu", "c0", "Bc", "min_p1", "integral_p1", "integral_delta",
            "cf_match_max", "chi2_estimate", "integral_f0", "integral_f1", "delta_crosscheck", "in_contract",
        )
        out = {k: getattr(self, k) for k in keys}
        out["failures"] = list(self.failures)
        out["passed"] = self.passed
        return out


def lower_bound_report(pc: PriorConstruction, chi2_const: float = 1.0, crosscheck_points: int = 16) -> LowerBoundReport:
    """Run every check for one construction.

    ``delta_crosscheck`` is the largest gap between the closed-form Delta and
    adaptive Simpson at a few fixed abscissae.
    """
    p1 = verify_p1(pc)
    pair = build_mixture_pair(pc)
    f0_int, f1_int = pair.integrals()
    cf = pair.cf_match_max()
    chi2 = pair.chi2()
    xs = np.geomspace(0.05, 200.0, crosscheck_points) / pc.tau
    xs = np.concatenate([xs, -xs[::3]])
    gap = max(abs(delta_eval(x, pc) - delta_closed(x, pc)) for x in xs)
    failures = list(p1.failures)
    if cf > 1e-6:
        failures.append("cf_match_max")
    if chi2 > chi2_const / pc.n:
        failures.append("chi2_estimate")
    if abs(f0_int - 1) > 1e-4:
        failures.append("integral_f0")
    if abs(f1_int - 1) > 1e-4:
        failures.append("integral_f1")
    if gap > 1e-8:
        failures.append("delta_crosscheck")
    return LowerBoundReport(
        pc.eps, pc.n, pc.tau, pc.lam, pc.mu, pc.c0, pc.Bc,
        p1.min_p1, p1.integral_p1, p1.integral_delta, cf, chi2, f0_int, f1_int, gap,
        pc.in_contract, tuple(failures),
    )


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def sample_p0(rng: np.random.Generator, size: int, tau: float) -> np.ndarray:
    u = rng.random(size)
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return p0_quantile(u, tau)


class RejectionError(RuntimeError):
    pass


def sample_p1(rng: np.random.Generator, size: int, pc: PriorConstruction, min_rate: float = 0.25) -> np.ndarray:
    """Rejection sampling from p1 with proposal p0 and envelope 2 p0."""
    out = np.empty(size)
    filled = 0
    while filled < size:
        want = size - filled
        batch = max(64, 2 * want + 16)
        y = sample_p0(rng, batch, pc.tau)
        p0 = p0_density(y, pc.tau)
        p1 = p0 + delta_closed(y, pc)
        if np.any(p1 > 2 * p0 * (1 + 1e-12)):
            raise RejectionError("envelope 2 p0 does not dominate p1")
        keep = y[rng.random(batch) * 2 * p0 <= p1]
        if keep.size < min_rate * batch:
            raise RejectionError(f"acceptance rate {keep.size / batch:.3f} below floor {min_rate}")
        take = min(want, keep.size)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def sample_mixture(pc: PriorConstruction, arm: int, n: int, seed: int = 0) -> Sample:
    """n i.i.d. draws from f0 (arm 0) or f1 (arm 1)."""
    if arm not in (0, 1):
        raise ValueError("arm must be 0 or 1")
    rng = stream(seed, "mixture", arm, n)
    eps, mu = pc.eps, pc.mu
    u = rng.random(n)
    contaminated = u < eps
    atom = contaminated & (rng.random(n) < 2 * eps)
    smooth = contaminated & ~atom
    centre = np.full(n, 2 * mu if arm == 1 else 0.0)
    centre[atom] = 2 * mu if arm == 0 else 0.0
    m = int(smooth.sum())
    if m:
        draws = sample_p0(rng, m, pc.tau) if arm == 0 else sample_p1(rng, m, pc)
        centre[smooth] = draws + mu
    return Sample(centre + rng.standard_normal(n))


def two_block_psi(k: int, n: int) -> float:
    return math.sqrt(math.log1p(n / (n - 2 * k) ** 2))


def two_block_prior_sample(k: int, n: int, C: float, arm: int, seed: int = 0) -> tuple[Sample, NullParams, np.ndarray]:
    """Data from one arm of the two-block prior, with its truth and gamma.

    Arm 0 has theta = C psi and gamma = -2 C psi on a random k-subset of the
    first half; arm 1 mirrors this on the second half.
    """
    if n % 2:
        raise ValueError("n must be even")
    if arm not in (0, 1):
        raise ValueError("arm must be 0 or 1")
    if not (n / 2 - math.sqrt(n) < k < n / 2):
        raise ValueError(f"k = {k} outside (n/2 - sqrt(n), n/2)")
    if C <= 0:
        raise ValueError("C must be positive")
    psi = two_block_psi(k, n)
    rng = stream(seed, "two-block", arm, n, k)
    half = n // 2
    pick = rng.choice(half, size=k, replace=False)
    gamma = np.zeros(n)
    if arm == 0:
        theta = C * psi
        gamma[pick] = -2 * C * psi
    else:
        theta = -C * psi
        gamma[half + pick] = 2 * C * psi
    x = theta + gamma + rng.standard_normal(n)
    return Sample(x), NullParams(theta, 1.0), gamma
