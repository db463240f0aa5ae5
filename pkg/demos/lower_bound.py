"""Numerical checks of the Fourier-matched prior pair behind the lower bound.

Run: python demos/lower_bound.py  (about 20 s)
"""

from nullest.lowerbound import PriorConstruction, lower_bound_report

for eps in (0.1, 0.3, 0.45):
    rep = lower_bound_report(PriorConstruction.from_eps(eps, 10_000))
    print(
        f"eps={eps:<5} tau={rep.tau:7.3f} min p1={rep.min_p1: .2e} "
        f"int p1-1={rep.integral_p1 - 1: .1e} cf gap={rep.cf_match_max:.1e} "
        f"chi2={rep.chi2_estimate:.1e} passed={not rep.failures}"
    )
