"""Spatially correlated Rayleigh channels over the ports of a linear fluid antenna.

All inter-port correlation is routed through one latent complex anchor
``x0 + j*y0``: port 1 equals the (scaled) anchor, and port ``k`` mixes the
anchor with its own independent Gaussian pair, weighted by
``mu_k = J0(2*pi*(k-1)*W/(N-1))``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .bessel import j0
from .rng import as_generator


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class FluidAntennaConfig:
    """Geometry and radio parameters of a fluid antenna link.

    Attributes:
        n_ports: number of ports N (>= 2).
        width: antenna length W in wavelengths.
        sigma_sq: mean channel power per port.
        theta: transmit-power-to-noise ratio, so the average SNR is
            ``sigma_sq * theta``.
        target_snr: outage threshold (linear).
    """

    n_ports: int
    width: float
    sigma_sq: float = 1.0
    theta: float = 1.0
    target_snr: float = 10.0

    def __post_init__(self):
        if int(self.n_ports) != self.n_ports or self.n_ports < 2:
            raise ValueError(f"n_ports must be an integer >= 2, got {self.n_ports!r}")
        for name in ("width", "sigma_sq", "theta", "target_snr"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    @property
    def average_snr(self) -> float:
        return self.sigma_sq * self.theta

    @classmethod
    def from_db(cls, n_ports, width, target_snr_db=10.0, avg_snr_db=None, sigma_sq=1.0):
        """Build a config from dB quantities.

        When ``avg_snr_db`` is None the average SNR is calibrated so that a
        single Rayleigh port is in outage with probability exactly 1/2
        (see :func:`calibrate_average_snr`).
        """
        target = db_to_linear(target_snr_db)
        if avg_snr_db is None:
            avg = calibrate_average_snr(target)
        else:
            avg = db_to_linear(avg_snr_db)
        return cls(n_ports=n_ports, width=width, sigma_sq=sigma_sq, theta=avg / sigma_sq,
                   target_snr=target)


def calibrate_average_snr(target_snr: float) -> float:
    """Average SNR at which one Rayleigh port has outage probability 0.5.

    Outage of a Rayleigh port is ``1 - exp(-target/avg)``; setting it to 1/2
    gives ``avg = target / ln 2``.
    """
    if not target_snr > 0:
        raise ValueError("target_snr must be positive")
    return target_snr / math.log(2.0)


@dataclass(frozen=True)
class CorrelationProfile:
    """Correlation of every port with port 1; ``mu[0] == 1``."""

    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size < 1:
            raise ValueError("mu must be a non-empty vector")
        if mu[0] != 1.0:
            raise ValueError("mu[0] must be 1")
        if np.any(np.abs(mu) > 1.0):
            raise ValueError("|mu| must not exceed 1")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def n_ports(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray
    anchor: tuple

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.gains)


def port_displacements(config: FluidAntennaConfig) -> np.ndarray:
    """Distance of each port from port 1, in wavelengths."""
    k = np.arange(config.n_ports)
    return k / (config.n_ports - 1) * config.width


def correlation_argument(config: FluidAntennaConfig) -> np.ndarray:
    return 2.0 * math.pi * port_displacements(config)


def correlation_profile(config: FluidAntennaConfig) -> CorrelationProfile:
    mu = j0(correlation_argument(config))
    mu[0] = 1.0
    return CorrelationProfile(np.clip(mu, -1.0, 1.0))


def _check_profile(config, profile):
    if profile.n_ports != config.n_ports:
        raise ValueError(f"profile has {profile.n_ports} ports, config has {config.n_ports}")


def generate_gains(config: FluidAntennaConfig, profile: CorrelationProfile, n_draws: int, rng):
    """Draw ``n_draws`` realizations at once.

    Returns:
        (gains, anchors): complex array of shape (n_draws, N) and real array of
        shape (n_draws, 2) holding (x0, y0).
    """
    _check_profile(config, profile)
    rng = as_generator(rng)
    n = config.n_ports
    # columns: x0, x1..x_{N-1} | y0, y1..y_{N-1}; unit-variance draws scaled to 1/2
    z = rng.standard_normal((n_draws, 2, n)) * math.sqrt(0.5)
    x, y = z[:, 0, :], z[:, 1, :]
    mu = profile.mu
    own = np.sqrt(np.clip(1.0 - mu * mu, 0.0, None))
    re = own * x + mu * x[:, :1]
    im = own * y + mu * y[:, :1]
    # port 1 is the anchor itself
    re[:, 0] = x[:, 0]
    im[:, 0] = y[:, 0]
    gains = config.sigma * (re + 1j * im)
    anchors = np.stack([x[:, 0], y[:, 0]], axis=1)
    return gains, anchors


def generate_realization(config: FluidAntennaConfig, profile: CorrelationProfile, rng) -> ChannelRealization:
    gains, anchors = generate_gains(config, profile, 1, rng)
    return ChannelRealization(gains=gains[0], anchor=(float(anchors[0, 0]), float(anchors[0, 1])))


def snr_of_port(gain, config: FluidAntennaConfig):
    """Instantaneous SNR ``|gain|^2 * theta``; vectorised over ``gain``."""
    return np.abs(gain) ** 2 * config.theta
