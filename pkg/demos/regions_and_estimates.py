"""
Optimal regions of a four-arm group
===================================

Every arm in a group is a known function of one hidden parameter.  Here we
look at which arm wins where, how far each true parameter sits from a
losing region, and what a single noisy mean says about the parameter.
"""

import numpy as np

from regional_bandits import GroupSpec, biased_distance, compute_regions, envelope, fig1_arms, invert

group = GroupSpec(fig1_arms())

# the grid scan finds the switch points; brentq polishes them
geo = compute_regions(group, grid_step=1e-4)
for x, left, right in geo.boundaries:
    print(f"arm {left} -> arm {right} at theta = {x:.8f}")

# the last switch is exactly where 0.8 t meets t^2
print("analytic last boundary: 0.8")

# the biased distance drives how hard it is to pick the right arm in a group
for theta in (0.1, 0.4, 0.7, 1.0):
    value, arm = envelope(group, theta)
    print(f"theta={theta:.1f}  best arm {arm}  value {value:.4f}  "
          f"distance to a losing region {biased_distance(geo, theta):.4f}")

# one arm's empirical mean pins down theta for every arm in the group
rng = np.random.default_rng(0)
theta = 0.7
draws = rng.random(500) < group.arms[2](theta)
theta_hat = invert(group.arms[2], draws.mean())
print(f"500 bernoulli pulls of arm 2 at theta=0.7 -> theta_hat = {theta_hat:.4f}")
print("implied means of all arms:", np.round(group.means(theta_hat), 4))
