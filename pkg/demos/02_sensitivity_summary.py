# How much hidden confounding would overturn a weighted estimate?
#
# The weighting above can only fix imbalance on what it can see. This
# script walks the sensitivity machinery: the bias formula, the
# robustness value, and the contour grid that maps out the region of
# parameter space where the conclusion flips.

import numpy as np

from surveysense import CalibrationProblem, solve_raking
from surveysense.bias import ObservedScale, SensitivityParams, adjusted_estimate, bias
from surveysense.summary import (
    RobustnessInput,
    contour_grid,
    killer_region_area,
    robustness_value,
)

rng = np.random.default_rng(3)
n = 900
x = (rng.random(n) < 0.5).astype(float)
y = 2.0 + 1.2 * x + rng.normal(size=n)
problem = CalibrationProblem(x[:, None], np.array([0.42]), column_names=("x",))
solved = solve_raking(problem)

scale = ObservedScale.from_sample(y, solved.values)
print(f"weighted estimate: {scale.mu_hat:.3f}")
print(f"outcome variance:  {scale.var_y:.3f}")
print(f"weight variance:   {scale.var_w:.4f}")

# a hypothetical confounder: correlates 0.3 with the outcome and would
# explain 10% of the ideal-weight variance
params = SensitivityParams(rho=0.3, r2=0.10)
shift = bias(params, scale)
print(f"\nimplied bias at (rho=0.3, R2=0.10): {shift:.4f}")
print(f"adjusted estimate: {adjusted_estimate(params, scale):.4f}")

# the robustness value is the single number to report: the strength, on
# both axes at once, that moves the estimate to the decision threshold
b_star = 2.4
rv = robustness_value(
    RobustnessInput(mu_hat=scale.mu_hat, b_star=b_star, var_y=scale.var_y, var_w=scale.var_w)
)
print(f"\nthreshold {b_star}: robustness value {rv:.4f}")

grid = contour_grid(scale, b_star, rho_step=0.02, r2_step=0.01)
print("contour grid:", grid.bias.shape, "points")
print(f"share of the grid past the threshold: {killer_region_area(grid):.3f}")

# bias vanishes along both axes: no correlation or no imbalance, no bias
mid = grid.rho_axis.size // 2
assert abs(grid.rho_axis[mid]) < 1e-12
print("bias at rho=0 row, max abs:", np.abs(grid.bias[mid]).max())
print("bias at R2=0 column, max abs:", np.abs(grid.bias[:, 0]).max())
