"""Observation plans, port selection rules and the Monte-Carlo outage harness.

Port numbers in this module's public API are 1-based, matching the way the
ports are numbered along the antenna. Arrays are indexed from 0 internally.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import FluidAntennaConfig, correlation_profile, generate_gains
from .rng import block_layout, derive_stream

log = logging.getLogger(__name__)

# The standard placement for five observed ports out of fifty. No single
# rounding rule of the evenly spread positions reproduces it.
_PINNED_PLANS = {(50, 5): (1, 12, 25, 38, 50)}


@dataclass(frozen=True)
class ObservationPlan:
    """Split of ports 1..N into observed and unobserved sets."""

    n_ports: int
    observed: tuple
    unobserved: tuple = field(init=False)

    def __post_init__(self):
        obs = tuple(sorted(int(k) for k in self.observed))
        if not obs:
            raise ValueError("at least one port must be observed")
        if len(set(obs)) != len(obs):
            raise ValueError(f"duplicate observed ports: {obs}")
        if obs[0] < 1 or obs[-1] > self.n_ports:
            raise ValueError(f"observed ports must lie in 1..{self.n_ports}: {obs}")
        object.__setattr__(self, "observed", obs)
        rest = tuple(k for k in range(1, self.n_ports + 1) if k not in set(obs))
        object.__setattr__(self, "unobserved", rest)

    @property
    def n_observed(self) -> int:
        return len(self.observed)

    @property
    def n_unobserved(self) -> int:
        return len(self.unobserved)

    @property
    def observed_idx(self) -> np.ndarray:
        """0-based array indices of the observed ports."""
        return np.asarray(self.observed, dtype=int) - 1

    @property
    def unobserved_idx(self) -> np.ndarray:
        return np.asarray(self.unobserved, dtype=int) - 1

    def observe(self, gains) -> np.ndarray:
        """Magnitudes of the observed ports, shape (..., n_observed)."""
        return np.abs(np.asarray(gains)[..., self.observed_idx])


def evenly_spread_plan(n_ports: int, n_observed: int) -> ObservationPlan:
    """Observed ports spread evenly from one end of the antenna to the other.

    One observed port sits in the middle (``round(N/2)``); otherwise port
    ``round(1 + (i-1)(N-1)/(n-1))`` for ``i = 1..n`` with half-up rounding.
    Collisions move to the next free port.
    """
    if not 1 <= n_observed <= n_ports:
        raise ValueError(f"need 1 <= n_observed <= n_ports, got {n_observed} of {n_ports}")
    pinned = _PINNED_PLANS.get((n_ports, n_observed))
    if pinned is not None:
        ports = list(pinned)
    elif n_observed == 1:
        ports = [int(math.floor(n_ports / 2 + 0.5))]
    else:
        ports = []
        taken = set()
        for i in range(n_observed):
            k = int(math.floor(1 + i * (n_ports - 1) / (n_observed - 1) + 0.5))
            while k in taken:
                k += 1
            if k > n_ports:
                k = max(set(range(1, n_ports + 1)) - taken)
            taken.add(k)
            ports.append(k)
    plan = ObservationPlan(n_ports, tuple(ports))
    log.debug("observation plan N=%d n=%d: %s", n_ports, n_observed, plan.observed)
    return plan


@dataclass(frozen=True)
class GainEstimateVector:
    """Observed magnitudes on the observed ports, estimates elsewhere."""

    values: np.ndarray
    plan: ObservationPlan

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape[-1] != self.plan.n_ports:
            raise ValueError("estimate vector length does not match the plan")
        if np.any(values < 0):
            raise ValueError("gain estimates must be nonnegative")
        object.__setattr__(self, "values", values)

    @classmethod
    def compose(cls, observed, estimates, plan: ObservationPlan):
        """Overlay observed magnitudes onto a full vector of estimates.

        Negative estimates are clipped to zero; works on a single vector or a
        batch with a leading dimension.
        """
        estimates = np.asarray(estimates, dtype=float)
        values = np.clip(estimates, 0.0, None).copy()
        values[..., plan.observed_idx] = observed
        return cls(values, plan)


def _first_argmax(values) -> np.ndarray:
    # np.argmax already returns the first maximal index
    return np.argmax(values, axis=-1)


def oracle_best_port(gains):
    """Port with the largest channel magnitude; ties go to the lowest port."""
    mags = np.abs(np.asarray(gains))
    if mags.shape[-1] == 0:
        raise ValueError("empty gain vector")
    return _first_argmax(mags) + 1


def select_port(estimates: GainEstimateVector):
    return _first_argmax(estimates.values) + 1


def reference_select(gains, plan: ObservationPlan):
    """Best port among the observed ones only."""
    observed = plan.observe(gains)
    return plan.observed_idx[_first_argmax(observed)] + 1


def outage_indicator(selected_gain, config: FluidAntennaConfig):
    """True where the selected port's SNR is strictly below the target."""
    return np.abs(selected_gain) ** 2 * config.theta < config.target_snr


@dataclass(frozen=True)
class OutageResult:
    outage_probability: float
    trials: int
    standard_error: float
    analytic: float = None

    @classmethod
    def from_count(cls, outages: int, trials: int, analytic=None):
        p = outages / trials
        return cls(p, trials, math.sqrt(p * (1.0 - p) / trials), analytic)


class ReferenceSelector:
    """Picks the best observed port."""

    name = "reference"

    def __call__(self, observed, plan, rng=None):
        return plan.observed_idx[_first_argmax(observed)] + 1


class OracleSelector:
    """Picks the best port using every port's true magnitude."""

    name = "oracle"
    full_information = True

    def __call__(self, magnitudes, plan, rng=None):
        return _first_argmax(magnitudes) + 1


def monte_carlo_outage(config: FluidAntennaConfig, plan: ObservationPlan, selector, n_trials: int,
                       root_seed, profile=None, block_size=None) -> OutageResult:
    """Estimate the outage probability of ``selector``.

    ``selector(observed, plan, rng)`` receives the observed magnitudes of a
    block of trials, shape (trials, n_observed), and returns 1-based port
    numbers. Selectors flagged ``full_information`` receive all N magnitudes
    instead; only the oracle should be.

    Each block of trials draws its channels and the selector's own randomness
    from streams keyed by the block index, so results do not depend on
    evaluation order.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if plan.n_ports != config.n_ports:
        raise ValueError("plan and config disagree on the number of ports")
    if profile is None:
        profile = correlation_profile(config)
    full = getattr(selector, "full_information", False)
    layout = block_layout(n_trials) if block_size is None else block_layout(n_trials, block_size)
    outages = 0
    for block, size in layout:
        gains, _ = generate_gains(config, profile, size, derive_stream(root_seed, "channel", block))
        mags = np.abs(gains)
        seen = mags if full else mags[:, plan.observed_idx]
        ports = np.asarray(selector(seen, plan, derive_stream(root_seed, "selector", block)))
        if ports.shape != (size,) or not np.issubdtype(ports.dtype, np.integer):
            raise ValueError(f"selector returned {ports.dtype} array of shape {ports.shape}, "
                             f"expected ({size},) integers")
        if ports.min() < 1 or ports.max() > config.n_ports:
            raise ValueError(f"selector returned a port outside 1..{config.n_ports}")
        chosen = gains[np.arange(size), ports - 1]
        outages += int(np.count_nonzero(outage_indicator(chosen, config)))
    return OutageResult.from_count(outages, n_trials)


def uncorrelated_antenna_count(width: float) -> int:
    """Antennas that fit in ``width`` wavelengths at half-wavelength spacing."""
    return int(math.floor(2.0 * width + 1e-9)) + 1


def analytic_selection_outage(config: FluidAntennaConfig, n_antennas: int) -> float:
    """Outage of best-of-L selection over i.i.d. Rayleigh branches."""
    return (1.0 - math.exp(-config.target_snr / config.average_snr)) ** n_antennas


def fixed_antenna_benchmark(config: FluidAntennaConfig, n_antennas: int, n_trials: int,
                            root_seed) -> OutageResult:
    """Best-antenna selection over ``n_antennas`` uncorrelated Rayleigh antennas."""
    if n_antennas < 1:
        raise ValueError("n_antennas must be >= 1")
    outages = 0
    for block, size in block_layout(n_trials):
        rng = derive_stream(root_seed, "fixed", block)
        z = rng.standard_normal((size, n_antennas, 2)) * math.sqrt(0.5)
        gains = config.sigma * (z[..., 0] + 1j * z[..., 1])
        best = gains[np.arange(size), _first_argmax(np.abs(gains))]
        outages += int(np.count_nonzero(outage_indicator(best, config)))
    return OutageResult.from_count(outages, n_trials, analytic_selection_outage(config, n_antennas))
