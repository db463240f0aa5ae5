"""Recover N(theta, sigma^2) from z-scores where a third of the coordinates are shifted.

Run: python demos/estimate_null.py
"""

import nullest as ne
from nullest.sim import generate_frequentist

n, k = 4000, 1200
truth = ne.NullParams(theta=0.3, sigma2=1.44)
# nonnulls sit 6 sigma to the right; the median is dragged toward them
cont = ne.ContaminationSpec.constant_shift(n, k, 6.0 * truth.sigma)
x = generate_frequentist(truth, cont, n, seed=7)

print(f"truth            theta = {truth.theta:+.4f}  sigma2 = {truth.sigma2:.4f}")
print(f"sample median    theta = {ne.sample_median(x):+.4f}")

known = ne.estimate_location_known_var(x, k, truth.sigma2)
print(f"known variance   theta = {known.theta_hat:+.4f}  (tau = {known.tau_used:.3f})")

unknown = ne.estimate_location_unknown_var(x, k, rng_seed=1)
print(f"unknown variance theta = {unknown.theta_hat:+.4f}  sigma2 = {unknown.sigma2_hat:.4f}")

var = ne.estimate_variance(x, k, seed=1)
print(f"variance only              sigma2 = {var.sigma2_hat:.4f}  (pilot {var.pilot_sigma2:.4f})")

rep = ne.adaptive_null_report(x, seed=1, truth=truth)
print(
    f"adaptive k       theta = {rep.params.theta:+.4f}  sigma2 = {rep.params.sigma2:.4f}"
    f"  (k' location {rep.location.k_prime}, variance {rep.variance.k_prime}, TV {rep.tv_proxy:.4f})"
)
