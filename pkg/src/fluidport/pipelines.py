"""Port selection methods end to end: data generation, training, evaluation.

Composite methods follow a fixed splitting protocol on ``Q`` labelled
examples: SPO trains on the first half, its predictions on the second half
form the LSTM's data, of which two thirds train the LSTM and the last third is
held out.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import aa, lstm, spo
from .channel import FluidAntennaConfig, correlation_profile, generate_gains
from .rng import as_generator, derive_seed, derive_stream
from .selection import (GainEstimateVector, ObservationPlan, OracleSelector, OutageResult,
                        ReferenceSelector, fixed_antenna_benchmark, monte_carlo_outage,
                        uncorrelated_antenna_count)

log = logging.getLogger(__name__)


class MethodId(enum.Enum):
    REFERENCE = "reference"
    AA = "aa"
    SPO = "spo"
    LSTM = "lstm"
    SPO_LSTM = "spo_lstm"
    AA_SPO_LSTM = "aa_spo_lstm"
    FIXED_ANTENNA = "fixed_antenna"
    ORACLE = "oracle"

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        key = str(text).strip().lower().replace("+", "_").replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown method {text!r}; choose from {names}") from None


LEARNED = (MethodId.SPO, MethodId.LSTM, MethodId.SPO_LSTM, MethodId.AA_SPO_LSTM)


class Dataset(NamedTuple):
    features: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return self.features.shape[0]

    def examples(self):
        return [spo.TrainingExample(a, g) for a, g in zip(self.features, self.labels)]


@dataclass(frozen=True)
class DatasetSplit:
    spo_train: np.ndarray
    spo_test: np.ndarray
    lstm_train: np.ndarray
    lstm_test: np.ndarray

    @classmethod
    def make(cls, q: int, seed=None):
        """Row indices for each stage; ``seed=None`` keeps the original order.

        ``lstm_train``/``lstm_test`` index into ``spo_test`` (the SPO output
        set), not into the full dataset.
        """
        if q < 6:
            raise ValueError(f"composite methods need at least 6 examples, got {q}")
        order = np.arange(q) if seed is None else np.random.default_rng(seed).permutation(q)
        half = q // 2
        spo_train, spo_test = order[:half], order[half:]
        cut = (2 * spo_test.size) // 3
        pos = np.arange(spo_test.size)
        return cls(spo_train, spo_test, pos[:cut], pos[cut:])


@dataclass
class TrainBudget:
    q_examples: int = 5000
    spo_settings: spo.SgdSettings = field(default_factory=spo.SgdSettings)
    lstm_settings: lstm.TrainSettings = field(default_factory=lstm.TrainSettings)
    lstm_shape: dict = field(default_factory=dict)  # overrides for LstmShape sizes


def generate_dataset(config: FluidAntennaConfig, plan: ObservationPlan, q_examples: int, rng,
                     profile=None) -> Dataset:
    """``q_examples`` fresh realizations: observed magnitudes and all N magnitudes."""
    if q_examples < 1:
        raise ValueError("q_examples must be >= 1")
    if profile is None:
        profile = correlation_profile(config)
    gains, _ = generate_gains(config, profile, q_examples, as_generator(rng))
    labels = np.abs(gains)
    return Dataset(labels[:, plan.observed_idx], labels)


def aa_preprocess(dataset: Dataset, plan: ObservationPlan, profile, sigma, rng) -> Dataset:
    """Extend every feature vector to all N ports with one AA draw per unobserved port."""
    if plan.n_unobserved == 0:
        return dataset
    return Dataset(aa.aa_fill(dataset.features, plan, profile, sigma, rng), dataset.labels)


def compose_spo_lstm(spo_model: spo.LinearPredictor, net: lstm.LstmNetwork, observed,
                     plan: ObservationPlan, features=None) -> GainEstimateVector:
    """Feed SPO's full predicted vector to the LSTM, then overlay observations.

    ``features`` defaults to ``observed``; pass AA-augmented features for the
    AA+SPO+LSTM variant.
    """
    observed = np.asarray(observed, dtype=float)
    if plan.n_unobserved == 0:
        return GainEstimateVector(observed.copy() if observed.ndim == 1 else observed, plan)
    a = observed if features is None else np.asarray(features, dtype=float)
    refined = lstm.predict_batch(net, spo.predict(spo_model, a))
    if observed.ndim == 1:
        refined = refined[0]
    return GainEstimateVector.compose(observed, refined, plan)


class SPOLSTMSelector:
    name = "spo_lstm"

    def __init__(self, spo_model, net, profile=None, sigma=None):
        self.spo_model = spo_model
        self.net = net
        # AA augmentation at inference when a profile is supplied
        self.profile = profile
        self.sigma = sigma

    def __call__(self, observed, plan, rng=None):
        features = None
        if self.profile is not None:
            features = aa.aa_fill(observed, plan, self.profile, self.sigma, rng)
        est = compose_spo_lstm(self.spo_model, self.net, observed, plan, features)
        return np.argmax(est.values, axis=1) + 1


def _lstm_shape(budget, n_inputs, n_outputs):
    return lstm.LstmShape(n_inputs=n_inputs, n_outputs=n_outputs, **budget.lstm_shape)


def _train_spo_lstm(data: Dataset, plan, budget, rng, split_seed=None):
    split = DatasetSplit.make(len(data), split_seed)
    model = spo.sgd_train((data.features[split.spo_train], data.labels[split.spo_train]),
                          budget.spo_settings, rng, record_trace=False)
    feats = spo.predict(model, data.features[split.spo_test])
    labels = data.labels[split.spo_test]
    unobs = plan.unobserved_idx
    shape = _lstm_shape(budget, plan.n_ports, plan.n_ports)
    net = lstm.LstmNetwork.initialize(shape, rng)
    net = lstm.train(net, feats[split.lstm_train], labels[split.lstm_train], unobs, budget.lstm_settings, rng)
    if split.lstm_test.size:
        held = lstm.predict_batch(net, feats[split.lstm_test])
        log.info("held-out LSTM mse %.5f", lstm.mse_loss(held, labels[split.lstm_test], unobs))
    return model, net


def train_selector(method, config: FluidAntennaConfig, plan: ObservationPlan,
                   budget: TrainBudget, rng, profile=None):
    """Train ``method`` on fresh data and return a selector for the harness."""
    method = MethodId.parse(method)
    rng = as_generator(rng)
    if profile is None:
        profile = correlation_profile(config)
    if method is MethodId.REFERENCE:
        return ReferenceSelector()
    if method is MethodId.ORACLE:
        return OracleSelector()
    if method is MethodId.AA:
        return aa.AASelector(profile, config.sigma)
    if method is MethodId.FIXED_ANTENNA:
        raise ValueError("the fixed-antenna benchmark does not select fluid-antenna ports")
    if method in (MethodId.SPO_LSTM, MethodId.AA_SPO_LSTM) and budget.q_examples < 6:
        raise ValueError(f"{method.value} needs q_examples >= 6 to split the data")
    data = generate_dataset(config, plan, budget.q_examples, rng, profile)
    if method is MethodId.SPO:
        return spo.SPOSelector(spo.sgd_train(data, budget.spo_settings, rng, record_trace=False))
    if plan.n_unobserved == 0:
        # nothing left to estimate; every estimator reduces to the reference rule
        return ReferenceSelector()
    if method is MethodId.LSTM:
        shape = _lstm_shape(budget, plan.n_observed, plan.n_ports)
        net = lstm.LstmNetwork.initialize(shape, rng)
        net = lstm.train(net, data.features, data.labels, plan.unobserved_idx, budget.lstm_settings, rng)
        return lstm.LSTMSelector(net)
    if method is MethodId.SPO_LSTM:
        model, net = _train_spo_lstm(data, plan, budget, rng)
        return SPOLSTMSelector(model, net)
    # AA_SPO_LSTM
    data = aa_preprocess(data, plan, profile, config.sigma, rng)
    model, net = _train_spo_lstm(data, plan, budget, rng)
    return SPOLSTMSelector(model, net, profile, config.sigma)


def run_method(method, config: FluidAntennaConfig, plan: ObservationPlan, train_budget: TrainBudget,
               eval_trials: int, root_seed) -> OutageResult:
    """Train (if needed) and evaluate one method.

    Training draws from a stream keyed by the method; evaluation channels come
    from a stream shared by all methods, so methods run with the same
    ``root_seed`` are compared on identical channels.
    """
    method = MethodId.parse(method)
    eval_seed = derive_seed(root_seed, "eval")
    if method is MethodId.FIXED_ANTENNA:
        n_ant = uncorrelated_antenna_count(config.width)
        return fixed_antenna_benchmark(config, n_ant, eval_trials, eval_seed)
    profile = correlation_profile(config)
    selector = train_selector(method, config, plan, train_budget,
                              derive_stream(root_seed, "train", method.value), profile)
    return monte_carlo_outage(config, plan, selector, eval_trials, eval_seed, profile=profile)
