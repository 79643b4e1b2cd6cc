"""Port selection for fluid antenna systems from a few observed ports."""

from .channel import (ChannelRealization, CorrelationProfile, FluidAntennaConfig,
                      calibrate_average_snr, correlation_profile, generate_gains,
                      generate_realization, port_displacements, snr_of_port)
from .pipelines import MethodId, TrainBudget, generate_dataset, run_method
from .selection import (GainEstimateVector, ObservationPlan, OutageResult, evenly_spread_plan,
                        fixed_antenna_benchmark, monte_carlo_outage, oracle_best_port,
                        reference_select, select_port)

__version__ = "0.1.0"
