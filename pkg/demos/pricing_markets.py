"""
Dynamic pricing across markets
==============================

Each market has one demand parameter and a menu of prices.  Revenue at a
price p is p (1 - theta p)^2, so every price in a market is informative
about the same theta.
"""

import numpy as np

from regional_bandits import Environment, preset, run

cfg = preset("pricing-stationary", replications=10, horizon=5000)
env = Environment(cfg.instance)

for m, (g, theta) in enumerate(zip(cfg.instance.groups, cfg.instance.theta_true)):
    prices = [f.param("p") for f in g.arms]
    print(f"market {m}: theta={theta}  revenue by price",
          dict(zip(prices, np.round(g.means(theta), 5).tolist())))
print("best (market, price index):", env.oracle_best(1)[:2])

result = run(cfg)
for label, s in result.summaries.items():
    print(f"{label:6s} cumulative regret at T={cfg.horizon}: {s.mean_cum[-1]:.1f} +/- {s.se_cum[-1]:.1f}")
