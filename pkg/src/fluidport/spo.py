"""Linear predict-then-optimise port selection trained with the SPO+ surrogate.

The decision is "pick one port", i.e. maximise ``g @ x`` over one-hot ``x``.
Losses here are regrets (nonnegative, zero for a correct decision):

    spo_loss(pred, g)      = max(g) - g[argmax(pred)]
    spo_plus_loss(pred, g) = max(2 pred - g) - 2 pred[k*] + g[k*],  k* = argmax(g)

and ``spo_plus_loss >= spo_loss`` everywhere.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .rng import as_generator

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


def omega_star(g) -> np.ndarray:
    """One-hot vector(s) at the first maximal entry along the last axis."""
    g = np.asarray(g, dtype=float)
    if g.shape[-1] == 0:
        raise ValueError("empty vector")
    out = np.zeros_like(g)
    np.put_along_axis(out, np.argmax(g, axis=-1)[..., None], 1.0, axis=-1)
    return out


def z_star(g):
    return np.max(np.asarray(g, dtype=float), axis=-1)


def _check_pair(pred, true):
    pred = np.asarray(pred, dtype=float)
    true = np.asarray(true, dtype=float)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    return pred, true


def spo_loss(g_pred, g_true):
    """Decision regret of acting on ``g_pred`` when ``g_true`` is realised."""
    g_pred, g_true = _check_pair(g_pred, g_true)
    chosen = np.take_along_axis(g_true, np.argmax(g_pred, axis=-1)[..., None], axis=-1)[..., 0]
    return z_star(g_true) - chosen


def spo_plus_loss(g_pred, g_true):
    """Convex SPO+ upper bound on :func:`spo_loss`."""
    g_pred, g_true = _check_pair(g_pred, g_true)
    best = np.argmax(g_true, axis=-1)[..., None]
    at_best = (2.0 * np.take_along_axis(g_pred, best, axis=-1)
               - np.take_along_axis(g_true, best, axis=-1))[..., 0]
    return z_star(2.0 * g_pred - g_true) - at_best


def spo_subgradient(g_pred, g_true):
    """Subgradient of :func:`spo_plus_loss` with respect to ``g_pred``.

    Equals ``2 * (omega*(2 pred - g) - omega*(g))``; the negative of the
    ascent direction written for the maximisation form.
    """
    g_pred, g_true = _check_pair(g_pred, g_true)
    return 2.0 * (omega_star(2.0 * g_pred - g_true) - omega_star(g_true))


@dataclass(frozen=True)
class TrainingExample:
    features: np.ndarray
    label: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.features, dtype=float)
        y = np.asarray(self.label, dtype=float)
        if f.ndim != 1 or y.ndim != 1:
            raise ValueError("features and label must be vectors")
        if np.any(f < 0) or np.any(y < 0):
            raise ValueError("features and labels are magnitudes and must be nonnegative")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "label", y)


def stack_examples(dataset):
    """(features, labels) matrices from a list of examples or a pair of arrays."""
    if isinstance(dataset, tuple):
        a, g = dataset
        return np.asarray(a, dtype=float), np.asarray(g, dtype=float)
    if not dataset:
        raise ValueError("empty dataset")
    dims = {(ex.features.size, ex.label.size) for ex in dataset}
    if len(dims) != 1:
        raise ValueError(f"inconsistent example dimensions: {sorted(dims)}")
    return (np.stack([ex.features for ex in dataset]),
            np.stack([ex.label for ex in dataset]))


@dataclass
class SgdSettings:
    step_size: float = 0.01
    batch_size: int = None  # None: the whole dataset, as in the full-batch algorithm
    max_iterations: int = 500
    convergence_tol: float = 1e-6
    init_scale: float = 0.1
    standardize: bool = False

    def __post_init__(self):
        if self.step_size < 0:
            raise ValueError("step_size must be nonnegative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be nonnegative")


@dataclass
class LinearPredictor:
    """``g_pred = B @ a``, optionally after standardising the features."""

    b_matrix: np.ndarray
    feature_mean: np.ndarray = None
    feature_scale: np.ndarray = None
    trace: list = field(default_factory=list, repr=False, compare=False)

    @property
    def n_ports(self) -> int:
        return self.b_matrix.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.b_matrix.shape[1]

    def transform(self, features):
        a = np.asarray(features, dtype=float)
        if a.shape[-1] != self.feature_dim:
            raise ValueError(f"expected {self.feature_dim} features, got {a.shape[-1]}")
        if self.feature_mean is not None:
            a = (a - self.feature_mean) / self.feature_scale
        return a


def predict(model: LinearPredictor, features):
    """Predicted gain vector(s); works on (dim,) or (batch, dim) input."""
    return model.transform(features) @ model.b_matrix.T


def decide(model: LinearPredictor, features):
    """1-based port picked by ``omega*(B a)``."""
    return np.argmax(predict(model, features), axis=-1) + 1


def batch_gradient(b_matrix, a, g):
    """Algorithm-1 direction ``mean_i (omega*(g_i) - omega*(2 B a_i - g_i)) a_i^T``.

    Moving ``B`` along ``+direction`` decreases the SPO+ regret; the factor 2
    of the subgradient is left to the step size.
    """
    pred = a @ b_matrix.T
    diff = omega_star(g) - omega_star(2.0 * pred - g)
    return diff.T @ a / a.shape[0]


def sgd_train(dataset, settings: SgdSettings, rng, record_trace=True) -> LinearPredictor:
    """Fit ``B`` by (sub)gradient descent on the mean SPO+ regret.

    Each iteration evaluates every example (or a random minibatch when
    ``settings.batch_size`` is set), averages the per-example directions and
    steps ``B``. Stops after ``max_iterations`` or once the averaged direction
    has Frobenius norm at most ``convergence_tol``.

    ``model.trace`` holds the mean SPO+ loss over the full dataset at the
    start of every iteration, followed by the value at the returned ``B``.
    """
    rng = as_generator(rng)
    a, g = stack_examples(dataset)
    if a.shape[0] != g.shape[0]:
        raise ValueError("features and labels have different numbers of rows")
    n_ports, dim = g.shape[1], a.shape[1]
    mean = scale = None
    if settings.standardize:
        mean = a.mean(axis=0)
        scale = a.std(axis=0)
        scale[scale == 0] = 1.0
        a = (a - mean) / scale
    b = rng.uniform(-settings.init_scale, settings.init_scale, size=(n_ports, dim))
    trace = []
    q = a.shape[0]
    for t in range(settings.max_iterations):
        if record_trace:
            trace.append(float(np.mean(spo_plus_loss(a @ b.T, g))))
        if settings.batch_size is None or settings.batch_size >= q:
            rows = slice(None)
        else:
            rows = rng.choice(q, size=settings.batch_size, replace=False)
        direction = batch_gradient(b, a[rows], g[rows])
        if np.linalg.norm(direction) <= settings.convergence_tol:
            log.debug("sgd converged after %d iterations", t)
            break
        b = b + settings.step_size * direction
    if record_trace:
        trace.append(float(np.mean(spo_plus_loss(a @ b.T, g))))
    return LinearPredictor(b, mean, scale, trace)


def decision_accuracy(model: LinearPredictor, dataset) -> float:
    """Fraction of examples where ``omega*(B a)`` hits the true best port."""
    a, g = stack_examples(dataset)
    return float(np.mean(np.argmax(predict(model, a), axis=1) == np.argmax(g, axis=1)))


class SPOSelector:
    name = "spo"

    def __init__(self, model: LinearPredictor):
        self.model = model

    def __call__(self, observed, plan, rng=None):
        return decide(self.model, observed)


def save_predictor(model: LinearPredictor, path):
    """Write ``B`` as text: rows, cols and format version, then the matrix.

    Standardisation statistics, when present, follow as two extra rows.
    """
    rows, cols = model.b_matrix.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{rows}\n{cols}\n{FORMAT_VERSION}\n")
        np.savetxt(fh, model.b_matrix, fmt="%.17g")
        if model.feature_mean is not None:
            np.savetxt(fh, model.feature_mean[None, :], fmt="%.17g")
            np.savetxt(fh, model.feature_scale[None, :], fmt="%.17g")


def load_predictor(path) -> LinearPredictor:
    with open(path, encoding="ascii") as fh:
        rows = int(fh.readline())
        cols = int(fh.readline())
        version = int(fh.readline())
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported predictor format version {version}")
        data = np.loadtxt(fh, ndmin=2)
    if data.shape not in ((rows, cols), (rows + 2, cols)):
        raise ValueError(f"matrix block of shape {data.shape} does not match header {rows}x{cols}")
    if data.shape[0] == rows:
        return LinearPredictor(data)
    return LinearPredictor(data[:rows], data[rows], data[rows + 1])
