"""
Outage against the number of observed ports
===========================================

A small version of the full sweep run by ``python -m fluidport``: every
method at W = 0.5, N = 50, with the average SNR calibrated so one port alone
is in outage half the time. Training budgets are cut down so this finishes in
a few minutes; the CLI defaults use 5000 examples and longer training.
"""

from fluidport import lstm, spo
from fluidport.channel import FluidAntennaConfig
from fluidport.pipelines import MethodId, TrainBudget, run_method
from fluidport.selection import evenly_spread_plan

cfg = FluidAntennaConfig.from_db(50, 0.5, 10.0)
budget = TrainBudget(
    q_examples=2000,
    spo_settings=spo.SgdSettings(max_iterations=1000, standardize=True),
    lstm_settings=lstm.TrainSettings(epochs=10),
)
counts = (1, 3, 5)
methods = [m for m in MethodId if m is not MethodId.FIXED_ANTENNA]

print("method        " + "".join(f"   |K|={n:<3d}" for n in counts))
for method in methods:
    cells = [run_method(method, cfg, evenly_spread_plan(50, n), budget, 20_000, 11) for n in counts]
    print(f"{method.value:13s}" + "".join(f"  {c.outage_probability:9.4f}" for c in cells))

fixed = run_method(MethodId.FIXED_ANTENNA, cfg, evenly_spread_plan(50, 1), budget, 20_000, 11)
print(f"two fixed antennas with selection: {fixed.outage_probability:.4f} (closed form {fixed.analytic:.4f})")
