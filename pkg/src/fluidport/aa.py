"""Analytical approximation (AA) of unobserved port magnitudes.

Given the anchor magnitude ``r0 = sqrt(x0^2 + y0^2)``, the magnitude of port
``l`` is Rician with per-dimension variance ``s^2 = sigma^2 (1 - mu_l^2) / 2``
and noncentrality ``nu = sigma |mu_l| r0``. AA draws one sample from that law
for every unobserved port.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .channel import CorrelationProfile
from .rng import as_generator
from .selection import GainEstimateVector, ObservationPlan

ANCHOR_GRID = np.linspace(0.0, 4.0, 512)

# Below this per-dimension variance a port is treated as fully determined by
# the anchor.
_DEGENERATE_VAR = 1e-12


class AnchorSource(enum.Enum):
    EXACT_PORT1 = "exact_port1"
    MLE_GRID = "mle_grid"


@dataclass(frozen=True)
class AnchorEstimate:
    r0: float
    source: AnchorSource

    def __post_init__(self):
        if not self.r0 >= 0:
            raise ValueError("r0 must be nonnegative")


def rician_params(mu, r0, sigma):
    """(noncentrality, per-dimension variance) of the conditional law."""
    mu = np.abs(np.asarray(mu, dtype=float))
    nu = sigma * mu * np.asarray(r0, dtype=float)
    var = sigma * sigma * (1.0 - mu * mu) / 2.0
    return nu, var


def rician_logpdf(r, nu, var):
    """Log density of a Rician magnitude; broadcasts over all arguments."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        z = r * nu / var
        out = (np.log(r) - np.log(var) - (r * r + nu * nu) / (2.0 * var)
               + np.log(special.i0e(z)) + z)
    return out


def rician_pdf(r, nu, var):
    return np.exp(rician_logpdf(r, nu, var))


def rician_cdf(r, nu, var):
    """CDF of the Rician law, ``1 - Q1(nu/s, r/s)``."""
    s = math.sqrt(var)
    return stats.rice.cdf(np.asarray(r, dtype=float) / s, nu / s)


def _anchor_loglik(observed, mu_obs, sigma):
    # observed: (T, n); returns (T, grid) log-likelihood of each grid anchor
    nu, var = rician_params(mu_obs[None, :], ANCHOR_GRID[:, None], sigma)
    var = np.maximum(var, _DEGENERATE_VAR)
    # a zero magnitude carries the same log r for every anchor; keep it finite
    observed = np.maximum(observed, 1e-300)
    ll = rician_logpdf(observed[:, None, :], nu[None, :, :], var[None, :, :])
    return ll.sum(axis=-1)


def estimate_anchor_batch(observed, plan: ObservationPlan, profile: CorrelationProfile, sigma,
                          chunk=1024) -> np.ndarray:
    """Anchor magnitudes for a batch of observations, shape (T,)."""
    observed = np.atleast_2d(np.asarray(observed, dtype=float))
    if 1 in plan.observed:
        return observed[:, plan.observed.index(1)] / sigma
    mu_obs = profile.mu[plan.observed_idx]
    out = np.empty(observed.shape[0])
    for start in range(0, observed.shape[0], chunk):
        part = observed[start:start + chunk]
        ll = _anchor_loglik(part, mu_obs, sigma)
        out[start:start + chunk] = ANCHOR_GRID[np.argmax(ll, axis=1)]
    return out


def estimate_anchor(observed: dict, profile: CorrelationProfile, sigma) -> AnchorEstimate:
    """Estimate ``r0`` from a ``{port: magnitude}`` mapping.

    Port 1 pins the anchor exactly. Otherwise ``r0`` is the grid point in
    [0, 4] (512 values) maximising the joint Rician likelihood.
    """
    if not observed:
        raise ValueError("need at least one observed port")
    if 1 in observed:
        return AnchorEstimate(float(observed[1]) / sigma, AnchorSource.EXACT_PORT1)
    ports = sorted(observed)
    plan = ObservationPlan(profile.n_ports, tuple(ports))
    mags = np.array([[observed[k] for k in ports]], dtype=float)
    r0 = estimate_anchor_batch(mags, plan, profile, sigma)[0]
    return AnchorEstimate(float(r0), AnchorSource.MLE_GRID)


def sample_magnitudes(mu, r0, sigma, rng):
    """Vectorised conditional draws; ``mu`` and ``r0`` broadcast together."""
    rng = as_generator(rng)
    nu, var = rician_params(mu, r0, sigma)
    nu, var = np.broadcast_arrays(nu, var)
    z = rng.standard_normal(nu.shape + (2,))
    s = np.sqrt(var)
    out = np.hypot(nu + s * z[..., 0], s * z[..., 1])
    return np.where(var <= _DEGENERATE_VAR, nu, out)


def conditional_sample(port: int, anchor: AnchorEstimate, profile: CorrelationProfile, sigma, rng) -> float:
    """One draw of ``|g_port|`` given the anchor (port is 1-based)."""
    mu = profile.mu[port - 1]
    return float(sample_magnitudes(mu, anchor.r0, sigma, rng))


def aa_fill(observed, plan: ObservationPlan, profile: CorrelationProfile, sigma, rng) -> np.ndarray:
    """Batch AA: observed magnitudes (T, n) to full vectors (T, N)."""
    observed = np.atleast_2d(np.asarray(observed, dtype=float))
    out = np.empty((observed.shape[0], plan.n_ports))
    out[:, plan.observed_idx] = observed
    if plan.n_unobserved:
        r0 = estimate_anchor_batch(observed, plan, profile, sigma)
        mu_u = profile.mu[plan.unobserved_idx]
        out[:, plan.unobserved_idx] = sample_magnitudes(mu_u[None, :], r0[:, None], sigma, rng)
    return out


def aa_estimate(observed, plan: ObservationPlan, profile: CorrelationProfile, sigma, rng) -> GainEstimateVector:
    """Fill every unobserved port of a single observation with one AA sample.

    ``observed`` is either a ``{port: magnitude}`` mapping or a vector in the
    plan's port order.
    """
    if isinstance(observed, dict):
        observed = [observed[k] for k in plan.observed]
    values = aa_fill(np.asarray(observed, dtype=float)[None, :], plan, profile, sigma, rng)[0]
    return GainEstimateVector(values, plan)


class AASelector:
    name = "aa"

    def __init__(self, profile: CorrelationProfile, sigma: float):
        self.profile = profile
        self.sigma = sigma

    def __call__(self, observed, plan, rng):
        filled = aa_fill(observed, plan, self.profile, self.sigma, rng)
        return np.argmax(filled, axis=1) + 1
