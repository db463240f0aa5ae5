import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nullest.baselines import CaiJinConfig, ClosedFormCF, caijin_location, caijin_variance
from nullest.core_types import ContaminationSpec, EstimatorFailure, Hyperparams, NullParams
from nullest.location import estimate_location_known_var
from nullest.sim import generate_frequentist


def test_config_validation():
    with pytest.raises(ValueError):
        CaiJinConfig(omega_star=0.0)
    with pytest.raises(ValueError):
        CaiJinConfig(fd_step=0.0)
    with pytest.raises(ValueError):
        CaiJinConfig(omega_star=5e-4, fd_step=1e-4)
    CaiJinConfig(omega_star=-1e-3, fd_step=1e-4)


@given(
    st.floats(min_value=-10, max_value=10),
    st.floats(min_value=0.1, max_value=3.0),
    st.floats(min_value=0.05, max_value=1.5).flatmap(lambda w: st.sampled_from([w, -w])),
)
def test_closed_form_identities(theta, sigma, w):
    cf = ClosedFormCF.gaussian(theta, sigma * sigma)
    cfg = CaiJinConfig(omega_star=w)
    assert caijin_location(cf, cfg) == pytest.approx(theta, rel=1e-12, abs=1e-12)
    assert caijin_variance(cf, cfg) == pytest.approx(sigma * sigma, rel=1e-12)


def test_pure_null_location():
    n = 10_000
    hits = 0
    for t in range(50):
        x = 0.7 + np.random.default_rng(t).standard_normal(n)
        hits += abs(caijin_location(x) - 0.7) <= 0.1
    assert hits >= 45


def test_pure_null_variance():
    n = 10_000
    errs = [abs(caijin_variance(2.0 * np.random.default_rng(t).standard_normal(n), CaiJinConfig(0.5)) / 4 - 1) for t in range(50)]
    assert np.median(errs) <= 0.1


def test_guard_on_small_modulus():
    with pytest.raises(EstimatorFailure):
        caijin_location([0.0, math.pi], CaiJinConfig(omega_star=1.0))


def test_unbounded_contamination_breaks_baseline_only():
    n, k = 2000, 200
    hp = Hyperparams()
    ours, theirs = [], []
    for t in range(20):
        x = generate_frequentist(NullParams(0.0, 1.0), ContaminationSpec.constant_shift(n, k, 1e6), n, t, "cj")
        ours.append(abs(estimate_location_known_var(x, k, 1.0, hp).theta_hat))
        theirs.append(abs(caijin_location(x)))
    assert np.median(ours) < 0.1
    assert np.median(theirs) > 10 * np.median(ours)
