"""
Calibrating intuition with observed covariates
==============================================

Sensitivity parameters are abstract until anchored to something real.
Dropping one weighting variable at a time and re-solving measures how
strong each observed covariate is on the same (rho, R2) axes a hidden
confounder would occupy.
"""

import numpy as np

from surveysense import CalibrationProblem, solve_raking
from surveysense.benchmark import benchmark_table, min_k, scaled_params

rng = np.random.default_rng(8)
n = 1500
party = (rng.random(n) < 0.45).astype(float)
educ = (rng.random(n) < 0.3 + 0.25 * party).astype(float)
turnout = (rng.random(n) < 0.5 + 0.1 * party - 0.05 * educ).astype(float)

y = 1.0 + 2.5 * party + 0.8 * educ + 0.4 * turnout + rng.normal(size=n)

matrix = np.column_stack([party, educ, turnout])
targets = np.array([0.50, 0.38, 0.55])
problem = CalibrationProblem(
    matrix, targets, column_names=("party", "educ", "turnout")
)
solved = solve_raking(problem)

records = benchmark_table(problem, solved, y, ("party", "educ", "turnout"), b_star=0.0)

print(f"{'variable':>10} {'R2':>7} {'rho':>7} {'est bias':>9} {'MRCS':>7}")
for r in records:
    print(
        f"{r.label:>10} {r.r2:7.3f} {r.rho:7.3f} {r.est_bias:9.3f} {r.mrcs:7.2f}"
    )

# MRCS reads: a confounder would need |MRCS| times this covariate's
# bias contribution to drag the estimate to b*. Large values mean safe.

# scaled_params answers "what if the confounder were twice party":
strongest = records[0]
r2_twice, rho_twice = scaled_params(2.0, 1.0, strongest.r2_raw, strongest.rho)
print(f"\na confounder 2x {strongest.label}: rho={rho_twice:.3f}, R2={r2_twice:.3f}")

# and min_k inverts the question: what multiple of party reaches the
# robustness value?
rv = 0.15
k_sigma, k_rho = min_k(strongest.r2_raw, strongest.rho, rv, direction=1.0)
print(f"multiples of {strongest.label} reaching RV={rv}: "
      f"k_sigma={k_sigma:.2f}, k_rho={k_rho:.2f}")
