"""Median error against the minimax rate as n grows with k = 0.3 n.

Run: python demos/rate_sweep.py  (about 20 s)
"""

from nullest.sim import SweepSpec, run_sweep

spec = SweepSpec.from_dict(
    {
        "n_list": [1000, 2000, 4000, 8000],
        "k_rule": {"kind": "frac", "value": 0.3},
        "contamination": "constant-shift",
        "trials": 20,
        "estimators": ["median", "known-var", "variance"],
        "seed": 3,
    }
)
result = run_sweep(spec)
print(f"{'estimator':<10} {'n':>5} {'k':>5} {'median err':>11} {'rate':>9} {'ratio':>7}")
for row in result.table:
    print(f"{row.estimator:<10} {row.n:>5} {row.k:>5} {row.median_err:>11.5f} {row.theory_rate:>9.5f} {row.ratio:>7.3f}")
