"""Estimation of an empirical null N(theta, sigma^2) from z-scores with sparse
arbitrary mean shifts."""

from .adaptation import (
    AdaptiveReport,
    LepskiTrace,
    adaptive_null_estimate,
    adaptive_null_report,
    lepski_location,
    lepski_variance,
    suffix_intersection,
)
from .baselines import CaiJinConfig, ClosedFormCF, caijin_location, caijin_variance
from .core_types import (
    ContaminationSpec,
    EstimatorFailure,
    Hyperparams,
    IdentifiabilityError,
    NullEstError,
    NullParams,
    RatePoint,
    Sample,
    eps_location,
    eps_variance,
    huber_modulus,
    huber_rate,
    rate_location_sq,
    rate_tv,
    rate_variance,
    tv_gaussian_quadrature,
    tv_gaussian_surrogate,
)
from .ecf import FrequencyGrid, ecf_derivative, ecf_eval, ecf_grid, ecf_norm
from .location import (
    DiskFitResult,
    LocationEstimate,
    NoiseModel,
    estimate_location_general,
    estimate_location_known_var,
    estimate_location_unknown_var,
    inner_disk_fit,
    laplace_tau,
    objective,
    sigma_interval,
    tau_known_var,
)
from .lowerbound import (
    DensityGrid,
    PriorConstruction,
    build_mixture_pair,
    delta_eval,
    lower_bound_report,
    p0_density,
    sample_mixture,
    two_block_prior_sample,
    verify_p1,
)
from .mode import ModeEstimate, kernel_mode, mode_bandwidth, sample_median
from .sim import SweepSpec, TrialResult, generate_bayes, generate_frequentist, run_sweep
from .variance import (
    PilotConfig,
    VarianceEstimate,
    VarianceWorkspace,
    cosine_supremum,
    estimate_variance,
    pilot_variance,
    single_frequency_variance,
    variance_frequency_window,
)

__version__ = "0.1.0"
