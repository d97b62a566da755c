"""
Evaluating the regret bounds
============================

The upper bound for the group policy, the worst-case shape and the
gaussian lower bound, side by side for the pricing instance.
"""

import numpy as np

from regional_bandits import bound_report, corollary_global_constant, global_instance, pricing_instance

horizons = np.array([1e2, 1e3, 1e4, 1e5])
rep = bound_report(pricing_instance(), horizons)
print(f"{'T':>8s} {'upper':>12s} {'shape':>12s} {'lower':>10s}")
for t, up, shape, low in zip(horizons, rep.thm1, rep.thm2, rep.thm4):
    print(f"{t:8.0f} {up:12.4g} {shape:12.4g} {low:10.4f}")

# the upper bound is loose by many orders of magnitude: the inverse padding
# function raises the half gap to the power 1/xi = 8
print("gaps:", np.round(rep.constants["gaps"], 5))

# with a single group the upper bound stops growing in T
print("single-group limit:", f"{corollary_global_constant(global_instance()):.4g}")
