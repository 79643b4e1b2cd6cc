"""
An LSTM reading the observed ports as a sequence
================================================

The observed magnitudes are fed one port at a time; the network regresses
all N magnitudes and only the unobserved ones enter the loss. A short run
already beats the constant (per-port mean) predictor.
"""

import numpy as np

from fluidport import FluidAntennaConfig, evenly_spread_plan
from fluidport.lstm import LstmNetwork, LstmShape, TrainSettings, mse_loss, predict_batch, train
from fluidport.pipelines import generate_dataset

cfg = FluidAntennaConfig.from_db(50, 0.5, 10.0)
plan = evenly_spread_plan(50, 5)
rng = np.random.default_rng(3)
train_set = generate_dataset(cfg, plan, 2000, rng)
test_set = generate_dataset(cfg, plan, 2000, rng)
unobs = plan.unobserved_idx

net = LstmNetwork.initialize(LstmShape(n_inputs=5, n_outputs=50), rng)
net = train(net, train_set.features, train_set.labels, unobs, TrainSettings(epochs=20), rng)

for epoch in (0, 4, 9, 19):
    print(f"epoch {epoch + 1:2d}: training MSE {net.history[epoch]:.4f}")

pred = predict_batch(net, test_set.features)
const = np.broadcast_to(train_set.labels.mean(axis=0), test_set.labels.shape)
print(f"test MSE: LSTM {mse_loss(pred, test_set.labels, unobs):.4f}, "
      f"per-port mean {mse_loss(const, test_set.labels, unobs):.4f}")
