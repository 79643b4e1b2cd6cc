"""
Estimating unobserved ports from the anchor
===========================================

Given the anchor magnitude r0, an unobserved port is Rician. The analytical
approximation (AA) draws one sample per unobserved port; when port 1 is not
observed, r0 comes from a grid maximum-likelihood fit to the observed ports.
"""

import numpy as np
from scipy import stats

from fluidport import (FluidAntennaConfig, ObservationPlan, correlation_profile, evenly_spread_plan,
                       generate_gains)
from fluidport.aa import aa_estimate, estimate_anchor_batch, rician_cdf, rician_params

cfg = FluidAntennaConfig.from_db(50, 0.5, 10.0)
profile = correlation_profile(cfg)
rng = np.random.default_rng(1)

# how well can the anchor be recovered? plans holding port 1 pin it exactly
gains, anchors = generate_gains(cfg, profile, 2000, rng)
true_r0 = np.hypot(anchors[:, 0], anchors[:, 1])
plans = [evenly_spread_plan(50, n) for n in (1, 3, 5)] + [ObservationPlan(50, (6, 12, 18)),
                                                         ObservationPlan(50, (12, 25, 38))]
for plan in plans:
    n_obs = plan.n_observed
    est = estimate_anchor_batch(np.abs(gains[:, plan.observed_idx]), plan, profile, cfg.sigma)
    print(f"|K| = {n_obs:2d} {plan.observed}: median |r0 error| = {np.median(np.abs(est - true_r0)):.3f}")

# one realization, five observed ports
plan = evenly_spread_plan(50, 5)
g = np.abs(gains[0])
est = aa_estimate(g[plan.observed_idx], plan, profile, cfg.sigma, rng)
print("\nport   true    AA")
for k in (1, 6, 12, 18, 25, 31, 38, 44, 50):
    mark = "*" if k in plan.observed else " "
    print(f"{k:3d}{mark} {g[k - 1]:6.3f} {est.values[k - 1]:6.3f}")

# the draws follow the conditional law exactly
nu, var = rician_params(0.9, 1.0, 1.0)
x = np.hypot(nu + np.sqrt(var) * rng.standard_normal(10_000), np.sqrt(var) * rng.standard_normal(10_000))
print(f"\nKS p-value against the Rician CDF: {stats.kstest(x, lambda r: rician_cdf(r, nu, var)).pvalue:.3f}")
