"""
How low can outage go with only a few observed ports?
=====================================================

Given the anchor magnitude r0, every port magnitude is Rician and the ports
are independent of one another. So the best any selector can do from the
observed magnitudes alone is: form the posterior over r0 from the observations
and the Rayleigh prior, compute each port's outage probability under it, and
pick the smallest. Averaging that minimum over channels gives a lower bound on
the outage of every method that sees only the observed ports.
"""

import math

import numpy as np
from scipy import stats

from fluidport import FluidAntennaConfig, correlation_profile, evenly_spread_plan, generate_gains
from fluidport.aa import rician_logpdf

cfg = FluidAntennaConfig.from_db(50, 0.5, 10.0)
profile = correlation_profile(cfg)
mu = np.abs(profile.mu)
threshold = math.sqrt(cfg.target_snr / cfg.theta)

grid = np.linspace(1e-4, 4.5, 900)
log_prior = np.log(2 * grid) - grid ** 2  # Rayleigh with unit second moment
var = np.maximum(cfg.sigma_sq * (1 - mu ** 2) / 2, 1e-12)
scale = np.sqrt(var)
# outage probability of each port for each candidate anchor, shape (grid, N)
port_outage = stats.rice.cdf(threshold / scale, cfg.sigma * mu * grid[:, None] / scale)

for n_obs in (1, 2, 3, 5, 10):
    plan = evenly_spread_plan(50, n_obs)
    gains, _ = generate_gains(cfg, profile, 20_000, np.random.default_rng(123))
    obs = np.abs(gains[:, plan.observed_idx])
    oi = plan.observed_idx
    loglik = np.concatenate([
        rician_logpdf(chunk[:, None, :], cfg.sigma * mu[oi] * grid[None, :, None], var[oi]).sum(axis=-1)
        for chunk in np.array_split(obs, 40)
    ]) + log_prior
    post = np.exp(loglik - loglik.max(axis=1, keepdims=True))
    post /= post.sum(axis=1, keepdims=True)
    p_out = post @ port_outage
    p_out[:, oi] = obs < threshold
    best = p_out.min(axis=1)
    realised = np.mean(np.abs(gains[np.arange(len(best)), p_out.argmin(axis=1)]) < threshold)
    print(f"|K| = {n_obs:2d}: lower bound {best.mean():.4f} +- {best.std() / math.sqrt(best.size):.4f}"
          f"  (the policy realises {realised:.4f})")
