"""Data generation and the Monte Carlo sweep harness."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core_types import (
    ContaminationSpec,
    Hyperparams,
    NullEstError,
    NullParams,
    Sample,
    rate_location_sq,
    rate_variance,
    tv_gaussian_surrogate,
)
from .rng import stream

THREADS_ENV = "NULL_EST_THREADS"


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def generate_frequentist(params: NullParams, spec: ContaminationSpec, n: int, seed: int = 0, *keys) -> Sample:
    """X_j = theta + gamma_j + sigma Z_j."""
    if spec.n != n:
        raise ValueError(f"gamma has length {spec.n}, expected {n}")
    z = stream(seed, "frequentist", *keys).standard_normal(n)
    return Sample(params.theta + spec.gamma + params.sigma * z)


@dataclass(frozen=True)
class QSpec:
    """Distribution of a contaminated coordinate's shift.

    kind "point": all mass at ``a``; "uniform": uniform on [a, b];
    "prior-g0" / "prior-g1": the lower-bound contamination laws g0 * delta_mu
    and g1 * delta_mu for the construction with parameters (eps_prior, n_prior).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    eps_prior: float = 0.3
    n_prior: int = 10_000

    def __post_init__(self) -> None:
        if self.kind not in ("point", "uniform", "prior-g0", "prior-g1"):
            raise ValueError(f"unknown Q kind {self.kind!r}")
        if self.kind == "uniform" and self.b < self.a:
            raise ValueError("uniform Q needs a <= b")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "point":
            return np.full(size, self.a)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        from .lowerbound import PriorConstruction, sample_p0, sample_p1

        pc = PriorConstruction.from_eps(self.eps_prior, self.n_prior)
        atom = rng.random(size) < 2 * pc.eps
        out = np.empty(size)
        m = int((~atom).sum())
        if self.kind == "prior-g0":
            out[atom] = 2 * pc.mu
            out[~atom] = sample_p0(rng, m, pc.tau) + pc.mu
        else:
            out[atom] = 0.0
            out[~atom] = sample_p1(rng, m, pc) + pc.mu
        return out


def generate_bayes(eps: float, params: NullParams, q_spec: QSpec, n: int, seed: int = 0, *keys) -> tuple[Sample, np.ndarray]:
    """Bernoulli(eps) contamination with shifts drawn from Q; returns data and gamma."""
    if not 0 <= eps <= 0.5:
        raise ValueError("eps must lie in [0, 1/2]")
    rng = stream(seed, "bayes", *keys)
    hit = rng.random(n) < eps
    gamma = np.zeros(n)
    gamma[hit] = q_spec.draw(rng, int(hit.sum()))
    z = rng.standard_normal(n)
    return Sample(params.theta + gamma + params.sigma * z), gamma


def adversary_omega(sigma: float, k: int, n: int, hp: Hyperparams) -> float:
    """Left end of the variance window at the true sigma."""
    from .variance import variance_frequency_window

    return variance_frequency_window(sigma, max(k, 1), n, hp)[0]


def build_contamination(
    kind: str,
    n: int,
    k: int,
    params: NullParams,
    hp: Hyperparams,
    value: float | None = None,
    rng: np.random.Generator | None = None,
) -> ContaminationSpec:
    """Contamination for one trial; ``value`` defaults to 10 sigma for shifts."""
    shift = 10.0 * params.sigma if value is None else float(value)
    if kind == "zero" or k == 0:
        return ContaminationSpec.zero(n)
    if kind == "constant-shift":
        return ContaminationSpec.constant_shift(n, k, shift)
    if kind == "two-sided-blocks":
        return ContaminationSpec.two_sided_blocks(n, k, shift)
    if kind == "pi-over-omega":
        w = adversary_omega(params.sigma, k, n, hp) if value is None else float(value)
        return ContaminationSpec.pi_over_omega(n, k, w)
    if kind in ("prior-g0", "prior-g1"):
        if rng is None:
            raise ValueError("random contamination needs an rng")
        q = QSpec(kind, eps_prior=min(0.5, k / n), n_prior=n)
        g = np.zeros(n)
        g[:k] = q.draw(rng, k)
        return ContaminationSpec(k, kind, g)
    raise ValueError(f"contamination kind {kind!r} is not supported in sweeps")


# ---------------------------------------------------------------------------
# Estimator registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialContext:
    k: int
    truth: NullParams
    hp: Hyperparams
    seed: int
    omega0: float


@dataclass(frozen=True)
class EstimatorEntry:
    target: str  # "location" or "variance"
    fn: Callable[[Sample, TrialContext], tuple[float | None, float | None]]


def _zero(x, ctx):
    return 0.0, None


def _median(x, ctx):
    from .mode import sample_median

    return sample_median(x), None


def _known_var(x, ctx):
    from .location import estimate_location_known_var

    return estimate_location_known_var(x, ctx.k, ctx.truth.sigma2, ctx.hp).theta_hat, None


def _unknown_var(x, ctx):
    from .location import estimate_location_unknown_var

    est = estimate_location_unknown_var(x, ctx.k, ctx.hp, ctx.seed)
    return est.theta_hat, est.sigma2_hat


def _variance(x, ctx):
    from .variance import estimate_variance

    return None, estimate_variance(x, ctx.k, ctx.hp, ctx.seed).sigma2_hat


def _single_frequency(x, ctx):
    from .variance import single_frequency_variance

    return None, single_frequency_variance(x, ctx.omega0)


def _pilot(x, ctx):
    from .variance import PilotConfig, pilot_variance

    return None, pilot_variance(x, PilotConfig.default(x.n, ctx.hp, ctx.seed))


def _kernel_mode(x, ctx):
    from .mode import kernel_mode_estimate

    return kernel_mode_estimate(x, ctx.k, ctx.hp, ctx.truth.sigma).theta_hat, None


def _lepski(x, ctx):
    from .adaptation import adaptive_null_estimate

    est = adaptive_null_estimate(x, ctx.hp, ctx.seed)
    return est.theta, est.sigma2


def _caijin(x, ctx):
    from .baselines import caijin_location, caijin_variance

    return caijin_location(x), caijin_variance(x)


ESTIMATORS: dict[str, EstimatorEntry] = {
    "zero": EstimatorEntry("location", _zero),
    "median": EstimatorEntry("location", _median),
    "known-var": EstimatorEntry("location", _known_var),
    "unknown-var": EstimatorEntry("location", _unknown_var),
    "kernel-mode": EstimatorEntry("location", _kernel_mode),
    "lepski": EstimatorEntry("location", _lepski),
    "caijin": EstimatorEntry("location", _caijin),
    "variance": EstimatorEntry("variance", _variance),
    "single-frequency": EstimatorEntry("variance", _single_frequency),
    "pilot": EstimatorEntry("variance", _pilot),
}


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KRule:
    kind: str  # sqrt_n, frac, near_half, fixed
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("sqrt_n", "frac", "near_half", "fixed"):
            raise ValueError(f"unknown k rule {self.kind!r}")

    def __call__(self, n: int) -> int:
        if self.kind == "sqrt_n":
            return int(math.floor(math.sqrt(n)))
        if self.kind == "frac":
            return int(math.floor(self.value * n))
        if self.kind == "near_half":
            return int(math.floor((n - self.value * math.sqrt(n)) / 2))
        return int(self.value)


@dataclass(frozen=True)
class SweepSpec:
    n_list: tuple[int, ...]
    k_rule: KRule
    contamination: str
    trials: int
    estimators: tuple[str, ...]
    seed: int = 0
    theta: float = 0.0
    sigma2: float = 1.0
    shift: float | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.n_list:
            raise ValueError("n_list must be nonempty")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ValueError(f"unknown estimator id {e!r}; choose from {sorted(ESTIMATORS)}")
        if not self.estimators:
            raise ValueError("no estimators given")

    @classmethod
    def from_dict(cls, d: Mapping) -> "SweepSpec":
        rule = d.get("k_rule", "sqrt_n")
        if isinstance(rule, str):
            krule = KRule(rule)
        elif isinstance(rule, Mapping):
            krule = KRule(rule["kind"], float(rule.get("value", 0.0)))
        else:
            raise ValueError("k_rule must be a string or an object")
        if "k" in d:
            krule = KRule("fixed", float(d["k"]))
        n_list = d.get("n_list", [d["n"]] if "n" in d else None)
        if not n_list:
            raise ValueError("sweep spec needs n_list or n")
        return cls(
            tuple(int(v) for v in n_list),
            krule,
            str(d.get("contamination", "constant-shift")),
            int(d.get("trials", 1)),
            tuple(d.get("estimators", ["median"])),
            int(d.get("seed", 0)),
            float(d.get("theta", 0.0)),
            float(d.get("sigma2", 1.0)),
            None if d.get("shift") is None else float(d["shift"]),
        )


@dataclass(frozen=True)
class TrialResult:
    estimator_id: str
    n: int
    k: int
    trial: int
    theta_err: float | None
    var_rel_err: float | None
    tv_err: float | None
    seed: int
    wall_time: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class AggregateRow:
    estimator: str
    n: int
    k: int
    trials: int
    median_err: float
    q10: float
    q90: float
    theory_rate: float
    ratio: float


CSV_COLUMNS = ("estimator", "n", "k", "trials", "median_err", "q10", "q90", "theory_rate", "ratio")


@dataclass
class SweepResult:
    trials: list[TrialResult]
    table: list[AggregateRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.table:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"table": [asdict(r) for r in self.table], "trials": [asdict(t) for t in self.trials]},
            indent=2,
        )


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else repr(v))
    return str(v)


def thread_count(requested: int | None = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    return max(1, n)


def run_trial(spec: SweepSpec, hp: Hyperparams, n: int, k: int, trial: int) -> list[TrialResult]:
    """One dataset, every estimator on it."""
    truth = NullParams(spec.theta, spec.sigma2)
    rng = stream(spec.seed, "contamination", n, k, trial)
    cont = build_contamination(spec.contamination, n, k, truth, hp, spec.shift, rng)
    if int(np.count_nonzero(cont.gamma)) > k:
        raise AssertionError("contamination count exceeds k")
    x = generate_frequentist(truth, cont, n, spec.seed, n, k, trial)
    omega0 = adversary_omega(truth.sigma, k, n, hp) if n >= 2 else 1.0
    trial_seed = int(stream(spec.seed, "trial-seed", n, k, trial).integers(0, 2**31 - 1))
    ctx = TrialContext(k, truth, hp, trial_seed, omega0)
    out = []
    for eid in spec.estimators:
        t0 = time.perf_counter()
        try:
            th, s2 = ESTIMATORS[eid].fn(x, ctx)
        except (NullEstError, ValueError, ArithmeticError) as exc:
            out.append(TrialResult(eid, n, k, trial, None, None, None, trial_seed, time.perf_counter() - t0, str(exc)))
            continue
        te = None if th is None else abs(th - truth.theta)
        ve = None if s2 is None else abs(s2 - truth.sigma2) / truth.sigma2
        tv = None
        if th is not None and s2 is not None and s2 > 0:
            tv = tv_gaussian_surrogate(NullParams(th, s2), truth)
        out.append(TrialResult(eid, n, k, trial, te, ve, tv, trial_seed, time.perf_counter() - t0))
    return out


def theory_rate(target: str, k: int, n: int, sigma2: float) -> float:
    kk = max(k, 1)
    if target == "location":
        return math.sqrt(rate_location_sq(kk, n, sigma2))
    return math.sqrt(rate_variance(kk, n))


def aggregate(spec: SweepSpec, results: Sequence[TrialResult]) -> list[AggregateRow]:
    rows = []
    groups: dict[tuple[str, int, int], list[float]] = {}
    for r in results:
        if not r.ok:
            continue
        target = ESTIMATORS[r.estimator_id].target
        err = r.theta_err if target == "location" else r.var_rel_err
        groups.setdefault((r.estimator_id, r.n, r.k), []).append(err)
    order = {e: i for i, e in enumerate(spec.estimators)}
    for (eid, n, k), errs in sorted(groups.items(), key=lambda kv: (order[kv[0][0]], kv[0][1], kv[0][2])):
        arr = np.asarray(errs)
        med = float(np.median(arr))
        q10, q90 = (float(v) for v in np.quantile(arr, [0.1, 0.9]))
        rate = theory_rate(ESTIMATORS[eid].target, k, n, spec.sigma2)
        rows.append(AggregateRow(eid, n, k, arr.size, med, q10, q90, rate, med / rate))
    return rows


def run_sweep(spec: SweepSpec, hp: Hyperparams | None = None, workers: int | None = None) -> SweepResult:
    """Every (n, trial) task on a thread pool, gathered in sorted order."""
    hp = hp or Hyperparams()
    tasks = [(n, spec.k_rule(n), t) for n in spec.n_list for t in range(spec.trials)]
    for n, k, _ in tasks:
        if k < 0 or 2 * k >= n:
            raise ValueError(f"k = {k} is not below n/2 for n = {n}")
    nthreads = thread_count(workers)
    if nthreads == 1:
        chunks = [run_trial(spec, hp, *task) for task in tasks]
    else:
        with ThreadPoolExecutor(nthreads) as pool:
            chunks = list(pool.map(lambda task: run_trial(spec, hp, *task), tasks))
    results = sorted((r for c in chunks for r in c), key=lambda r: (r.n, r.k, r.trial, spec.estimators.index(r.estimator_id)))
    return SweepResult(results, aggregate(spec, results))
