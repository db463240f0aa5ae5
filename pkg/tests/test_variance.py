import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullest.core_types import EstimatorFailure, Hyperparams
from nullest.variance import (
    PilotConfig,
    VarianceWorkspace,
    cosine_supremum,
    estimate_variance,
    noise_floor,
    pilot_variance,
    single_frequency_variance,
    variance_frequency_window,
)

HP = Hyperparams()
A_K4000 = 0.361804481648666852806848672805  # 0.125 sqrt(log(1600 e)), mpmath


def normal(seed, n, sigma=1.0, theta=0.0):
    return theta + sigma * np.random.default_rng(seed).standard_normal(n)


# --- pilot -----------------------------------------------------------------


def test_pilot_config_defaults():
    cfg = PilotConfig.default(1000, HP)
    assert cfg.m == math.ceil(1000**1.5)
    assert cfg.ell == math.ceil(2.6 * math.log(1000))
    assert PilotConfig.default(10**6, HP).m == HP.m_cap
    with pytest.raises(ValueError):
        PilotConfig(0, 5)


def test_pilot_full_subset_is_sample_variance():
    x = np.arange(1.0, 12.0)
    assert pilot_variance(x, PilotConfig(1, x.size)) == pytest.approx(np.var(x, ddof=1), rel=1e-15)


def test_pilot_is_min_over_subsets():
    x = normal(1, 50)
    one = pilot_variance(x, PilotConfig(1, 10, seed=3))
    many = pilot_variance(x, PilotConfig(500, 10, seed=3))
    assert many <= one


def test_pilot_constant_data_fails():
    with pytest.raises(EstimatorFailure):
        pilot_variance(np.full(30, 2.0), PilotConfig(100, 5))


def test_pilot_skips_constant_subsets():
    x = np.r_[np.zeros(40), np.arange(1.0, 11.0)]
    v = pilot_variance(x, PilotConfig(2000, 3, seed=0))
    assert v > 0


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_pilot_homogeneous(c):
    x = normal(2, 300)
    cfg = PilotConfig.default(300, HP, seed=9)
    assert pilot_variance(c * x, cfg) == pytest.approx(c * c * pilot_variance(x, cfg), rel=1e-12)


def test_pilot_coverage_pure_null():
    n = 1000
    hits = 0
    for t in range(200):
        v = pilot_variance(normal(t, n), PilotConfig.default(n, HP, seed=t))
        hits += 0.1 <= v <= 10
    assert hits >= 190


# --- window ------------------------------------------------------------------


def test_window_parametric_branch():
    a, b = variance_frequency_window(2.0, 10, 10_000, HP)
    assert a == pytest.approx(0.25 / 2.0)
    assert b == 100 * a


def test_window_frozen_value():
    a, b = variance_frequency_window(2.0, 4000, 10_000, HP)
    assert a == pytest.approx(A_K4000, rel=1e-13)
    assert b / a == pytest.approx(100.0, rel=1e-15)


# --- estimator ---------------------------------------------------------------


def test_estimate_fields():
    est = estimate_variance(normal(0, 2000), 10, HP, seed=0)
    assert est.a_used <= est.omega_argmin <= est.b_used
    assert est.b_used == pytest.approx(100 * est.a_used)
    assert est.sigma2_hat >= 0


def test_window_grid_has_512_points():
    ws = VarianceWorkspace(normal(0, 2000), HP, 0)
    a, b = variance_frequency_window(ws.sigma_tilde, 1, 2000, HP)
    w, _ = ws.grid(a, b)
    assert w.size >= 512
    assert w[0] == a and w[-1] == b
    assert np.all(np.diff(w) > 0)
    a, b = variance_frequency_window(ws.sigma_tilde, 900, 2000, HP)
    w, _ = ws.grid(a, b)
    assert w.size >= 512 and w[0] == a and w[-1] == b


def test_workspace_matches_standalone():
    x = normal(4, 1500, 1.7)
    ws = VarianceWorkspace(x, HP, seed=4)
    for k in (1, 40, 300, 700):
        assert ws.estimate(k) == estimate_variance(x, k, HP, seed=4)


def test_noise_floor_value():
    assert noise_floor(1000, HP) == pytest.approx(2 * math.sqrt(math.log(1000) / 1000))


def test_degenerate_window_raises():
    # a pilot 1e4 times too small puts the window far above the ECF noise floor
    x = normal(0, 500)
    with pytest.raises(EstimatorFailure, match="ecf-degenerate"):
        estimate_variance(x, 1, HP, pilot_sigma2=1e-4)


def test_parametric_accuracy_pure_null():
    n = 5000
    errs = [abs(estimate_variance(normal(t, n, 1.0, 3.0), 1, HP, seed=t).sigma2_hat - 1) for t in range(100)]
    assert np.median(errs) <= 10 / math.sqrt(n)


def test_shift_invariance():
    x = normal(5, 3000)
    a = estimate_variance(x, 20, HP, seed=1).sigma2_hat
    b = estimate_variance(x + 1e6, 20, HP, seed=1).sigma2_hat
    assert abs(a - b) <= 1e-9 * a


@settings(max_examples=20)
@given(st.integers(min_value=0, max_value=2**31 - 1), st.floats(min_value=0.05, max_value=20.0))
def test_scale_equivariance(seed, c):
    x = normal(seed, 400)
    a = estimate_variance(x, 10, HP, seed=seed).sigma2_hat
    b = estimate_variance(c * x, 10, HP, seed=seed).sigma2_hat
    assert b == pytest.approx(c * c * a, rel=1e-6)


def test_more_inliers_do_not_hurt():
    k = 100
    meds = []
    for n in (1000, 4000):
        errs = []
        for t in range(40):
            x = normal(t, n)
            x[:k] += 7.0
            errs.append(abs(estimate_variance(x, k, HP, seed=t).sigma2_hat - 1))
        meds.append(np.median(errs))
    assert meds[1] <= meds[0]


# --- single frequency ----------------------------------------------------------


def test_single_frequency_pure_null():
    n = 200_000
    v = single_frequency_variance(normal(1, n, 1.0), 1.0)
    assert abs(v - 1) <= 10 / math.sqrt(n)


def test_single_frequency_inversion_identity():
    w = 0.9
    d = 2 * math.acos(math.exp(-w * w / 2)) / w
    assert single_frequency_variance([0.0, d], w) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n,k,w", [(100, 30, 0.5), (1000, 450, 1.3), (50, 1, 2.0)])
def test_single_frequency_pi_over_omega_bias(n, k, w):
    x = np.zeros(n)
    x[:k] = math.pi / w
    assert single_frequency_variance(x, w) == pytest.approx(2 / w**2 * math.log(n / (n - 2 * k)), rel=1e-11)


def test_single_frequency_guards():
    with pytest.raises(ValueError):
        single_frequency_variance([0.0, 1.0], 0.0)
    with pytest.raises(EstimatorFailure):
        single_frequency_variance([0.0, math.pi], 1.0)


# --- cosine supremum -----------------------------------------------------------


def test_cosine_supremum_zero_shifts():
    assert cosine_supremum(np.zeros(5), 0.3) == pytest.approx(1.0)


def test_cosine_supremum_single_shift():
    alpha = 0.4
    assert cosine_supremum([math.pi / alpha], alpha, 10_000) > 0.999


@settings(max_examples=100)
@given(
    st.lists(st.floats(min_value=-1e3, max_value=1e3, allow_nan=False), min_size=1, max_size=30),
    st.floats(min_value=1e-3, max_value=10.0),
)
def test_cosine_supremum_lower_bound(gammas, alpha):
    assert cosine_supremum(gammas, alpha, 10_000) >= -0.2 - 1e-3
