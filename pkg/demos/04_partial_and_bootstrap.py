# coding: utf-8
# A variable you observe on respondents but whose population margin is
# unknown sits between "weight on it" and "ignore it". The sweep treats
# its margin as a free parameter: weight on it at each posited value and
# watch the estimate move. Percentile bootstrap intervals come last.

import numpy as np

from surveysense import CalibrationProblem, solve_raking
from surveysense.bias import SensitivityParams
from surveysense.bootstrap import bootstrap_interval
from surveysense.partial import binary_grid, partial_sweep

rng = np.random.default_rng(21)
n = 800

region = (rng.random(n) < 0.5).astype(float)
# interest in the topic: observed per respondent, margin unknown
interest = (rng.random(n) < 0.35 + 0.3 * region).astype(float)
y = 0.5 + region + 2.0 * interest + rng.normal(scale=0.5, size=n)

problem = CalibrationProblem(
    region[:, None], np.array([0.45]), column_names=("region",)
)
baseline = solve_raking(problem)

sweep = partial_sweep(
    problem, interest, y, label="interest",
    grid=binary_grid(step=0.05), baseline=baseline,
)
print(f"baseline: weighted share {sweep.baseline_t:.3f}, "
      f"estimate {sweep.baseline_estimate:.3f}")
print("\nposited share -> estimate")
for p in sweep.points:
    if not p.feasible:
        print(f"  {p.t_v:.2f}   infeasible")
        continue
    marker = "  <- baseline" if p.is_baseline else ""
    print(f"  {p.t_v:.2f}   {p.estimate:.3f}{marker}")

# the curve is the whole answer: if every defensible margin lands on the
# same side of the threshold, the unknown margin cannot change the call

print("\nbootstrap interval at (rho, R2) = (0, 0):")
res = bootstrap_interval(
    problem, y, SensitivityParams(rho=0.0, r2=0.0), b=400, seed=5
)
print(f"  95% CI [{res.lower:.3f}, {res.upper:.3f}], "
      f"{res.dropped} of {res.n_draws} draws dropped")

print("bootstrap interval at (rho, R2) = (0.3, 0.1):")
res = bootstrap_interval(
    problem, y, SensitivityParams(rho=0.3, r2=0.1), b=400, seed=5
)
print(f"  95% CI [{res.lower:.3f}, {res.upper:.3f}]")
