"""LSTM regressor for unobserved port magnitudes, in plain numpy.

Layer stack (defaults): an LSTM with 10 cells reads the observed magnitudes
one port at a time; its final hidden state passes through four dense layers of
200 linear units, each followed by dropout (0.2, 0.5, 0.2, 0.5), and a linear
output layer with one unit per port. Training is minibatch gradient descent on
the squared error over the unobserved ports, with gradients from
backpropagation through time.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import as_generator
from .selection import GainEstimateVector, ObservationPlan

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class LstmShape:
    n_inputs: int
    n_outputs: int
    hidden: int = 10
    dense_width: int = 200
    dropout: tuple = (0.2, 0.5, 0.2, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "dropout", tuple(float(p) for p in self.dropout))
        if min(self.n_inputs, self.n_outputs, self.hidden, self.dense_width) < 1:
            raise ValueError("all layer sizes must be positive")
        if any(not 0 <= p < 1 for p in self.dropout):
            raise ValueError("dropout rates must lie in [0, 1)")

    @property
    def n_dense(self) -> int:
        return len(self.dropout)

    def param_shapes(self) -> dict:
        h, d = self.hidden, self.dense_width
        shapes = {"lstm_wx": (1, 4 * h), "lstm_wh": (h, 4 * h), "lstm_b": (4 * h,)}
        fan_in = h
        for i in range(self.n_dense):
            shapes[f"dense{i}_w"] = (fan_in, d)
            shapes[f"dense{i}_b"] = (d,)
            fan_in = d
        shapes["out_w"] = (fan_in, self.n_outputs)
        shapes["out_b"] = (self.n_outputs,)
        return shapes


@dataclass
class TrainSettings:
    batch_size: int = 10
    epochs: int = 50
    learning_rate: float = 0.05

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or self.learning_rate < 0:
            raise ValueError("batch_size must be positive; epochs and learning_rate nonnegative")


@dataclass
class LstmNetwork:
    shape: LstmShape
    params: dict
    history: list = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def initialize(cls, shape: LstmShape, rng):
        """Uniform weights in +-1/sqrt(fan_in); the recurrent layer uses its cell count."""
        rng = as_generator(rng)
        params = {}
        for name, shp in shape.param_shapes().items():
            if name.startswith("lstm"):
                bound = 1.0 / math.sqrt(shape.hidden)
            elif name.endswith("_w"):
                bound = 1.0 / math.sqrt(shp[0])
            else:
                fan = shape.hidden if name == "dense0_b" else shape.dense_width
                bound = 1.0 / math.sqrt(fan)
            params[name] = rng.uniform(-bound, bound, size=shp)
        return cls(shape, params)

    @classmethod
    def zeros(cls, shape: LstmShape):
        return cls(shape, {k: np.zeros(s) for k, s in shape.param_shapes().items()})

    def copy(self):
        return LstmNetwork(self.shape, {k: v.copy() for k, v in self.params.items()})


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def draw_masks(shape: LstmShape, batch: int, rng):
    """Inverted-dropout masks, one per dense layer."""
    rng = as_generator(rng)
    masks = []
    for p in shape.dropout:
        keep = rng.random((batch, shape.dense_width)) >= p
        masks.append(keep / (1.0 - p))
    return masks


def _forward(net: LstmNetwork, series, masks):
    p = net.params
    h_size = net.shape.hidden
    x = np.asarray(series, dtype=float)
    batch, steps = x.shape
    h = np.zeros((batch, h_size))
    c = np.zeros((batch, h_size))
    cache = {"x": x, "steps": []}
    for t in range(steps):
        z = x[:, t:t + 1] @ p["lstm_wx"] + h @ p["lstm_wh"] + p["lstm_b"]
        i = _sigmoid(z[:, :h_size])
        f = _sigmoid(z[:, h_size:2 * h_size])
        g = np.tanh(z[:, 2 * h_size:3 * h_size])
        o = _sigmoid(z[:, 3 * h_size:])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        cache["steps"].append((h_prev, c_prev, i, f, g, o, tc))
    a = h
    dense_in = []
    for k in range(net.shape.n_dense):
        dense_in.append(a)
        a = a @ p[f"dense{k}_w"] + p[f"dense{k}_b"]
        if masks is not None:
            a = a * masks[k]
    cache["dense_in"] = dense_in
    cache["last"] = a
    cache["masks"] = masks
    out = a @ p["out_w"] + p["out_b"]
    return out, cache


def forward(net: LstmNetwork, series, mode="eval", rng=None, masks=None):
    """Network output for one series (n,) or a batch (B, n).

    In ``"train"`` mode dropout masks are drawn from ``rng`` unless given;
    ``"eval"`` mode applies no dropout.
    """
    x = np.asarray(series, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != net.shape.n_inputs:
        raise ValueError(f"series length {x.shape[1]} != configured {net.shape.n_inputs}")
    if mode == "train":
        if masks is None:
            masks = draw_masks(net.shape, x.shape[0], rng)
    elif mode == "eval":
        masks = None
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out, _ = _forward(net, x, masks)
    return out[0] if single else out


def backward(net: LstmNetwork, cache, d_out) -> dict:
    """Parameter gradients given the gradient of the loss w.r.t. the output."""
    p = net.params
    grads = {}
    a = cache["last"]
    grads["out_w"] = a.T @ d_out
    grads["out_b"] = d_out.sum(axis=0)
    da = d_out @ p["out_w"].T
    for k in reversed(range(net.shape.n_dense)):
        if cache["masks"] is not None:
            da = da * cache["masks"][k]
        inp = cache["dense_in"][k]
        grads[f"dense{k}_w"] = inp.T @ da
        grads[f"dense{k}_b"] = da.sum(axis=0)
        da = da @ p[f"dense{k}_w"].T
    x = cache["x"]
    dwx = np.zeros_like(p["lstm_wx"])
    dwh = np.zeros_like(p["lstm_wh"])
    db = np.zeros_like(p["lstm_b"])
    dh = da
    dc = np.zeros_like(da)
    for t in reversed(range(x.shape[1])):
        h_prev, c_prev, i, f, g, o, tc = cache["steps"][t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([di * i * (1.0 - i), df * f * (1.0 - f),
                             dg * (1.0 - g * g), do * o * (1.0 - o)], axis=1)
        dwx += x[:, t:t + 1].T @ dz
        dwh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dh = dz @ p["lstm_wh"].T
        dc = dc * f
    grads["lstm_wx"] = dwx
    grads["lstm_wh"] = dwh
    grads["lstm_b"] = db
    return grads


def _unobserved_mask(unobserved, n_outputs):
    mask = np.zeros(n_outputs, dtype=bool)
    mask[np.asarray(unobserved, dtype=int)] = True
    if not mask.any():
        raise ValueError("the loss needs at least one unobserved port")
    return mask


def mse_loss(predicted, label, unobserved) -> float:
    """Mean squared error over the unobserved entries (0-based indices).

    Batched input is averaged over rows as well.
    """
    predicted = np.asarray(predicted, dtype=float)
    label = np.asarray(label, dtype=float)
    if predicted.shape != label.shape:
        raise ValueError("predicted and label shapes differ")
    mask = _unobserved_mask(unobserved, predicted.shape[-1])
    err = (predicted - label)[..., mask]
    return float(np.mean(err * err))


def loss_and_grads(net: LstmNetwork, series, labels, unobserved, masks=None):
    """Masked MSE of a batch and its gradient for every parameter."""
    labels = np.asarray(labels, dtype=float)
    mask = _unobserved_mask(unobserved, net.shape.n_outputs)
    out, cache = _forward(net, np.atleast_2d(series), masks)
    err = (out - labels) * mask
    m = mask.sum() * out.shape[0]
    loss = float(np.sum(err * err) / m)
    grads = backward(net, cache, 2.0 * err / m)
    return loss, grads


def train(net: LstmNetwork, series, labels, unobserved, settings: TrainSettings, rng) -> LstmNetwork:
    """Minibatch gradient descent; returns a new trained network.

    ``series`` is (Q, n), ``labels`` (Q, N); ``unobserved`` holds the 0-based
    output indices that enter the loss. The per-epoch mean training loss is
    recorded in ``history``.
    """
    rng = as_generator(rng)
    series = np.asarray(series, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if series.ndim != 2 or series.shape[1] != net.shape.n_inputs:
        raise ValueError(f"series must have shape (Q, {net.shape.n_inputs})")
    if labels.shape != (series.shape[0], net.shape.n_outputs):
        raise ValueError(f"labels must have shape ({series.shape[0]}, {net.shape.n_outputs})")
    net = net.copy()
    q = series.shape[0]
    for epoch in range(settings.epochs):
        order = rng.permutation(q)
        total = 0.0
        for start in range(0, q, settings.batch_size):
            rows = order[start:start + settings.batch_size]
            masks = draw_masks(net.shape, rows.size, rng)
            loss, grads = loss_and_grads(net, series[rows], labels[rows], unobserved, masks)
            total += loss * rows.size
            for name, grad in grads.items():
                net.params[name] -= settings.learning_rate * grad
        net.history.append(total / q)
        log.debug("epoch %d: train mse %.5f", epoch, net.history[-1])
    return net


def predict_batch(net: LstmNetwork, series, chunk=8192):
    series = np.atleast_2d(np.asarray(series, dtype=float))
    out = np.empty((series.shape[0], net.shape.n_outputs))
    for start in range(0, series.shape[0], chunk):
        out[start:start + chunk] = forward(net, series[start:start + chunk], mode="eval")
    return out


def estimate(net: LstmNetwork, observed, plan: ObservationPlan) -> GainEstimateVector:
    """Observed magnitudes on observed ports, network output elsewhere."""
    observed = np.asarray(observed, dtype=float)
    if plan.n_unobserved == 0:
        return GainEstimateVector(observed.copy(), plan)
    out = forward(net, observed, mode="eval")
    return GainEstimateVector.compose(observed, out, plan)


class LSTMSelector:
    name = "lstm"

    def __init__(self, net: LstmNetwork):
        self.net = net

    def __call__(self, observed, plan, rng=None):
        est = GainEstimateVector.compose(observed, predict_batch(self.net, observed), plan)
        return np.argmax(est.values, axis=1) + 1


def save_network(net: LstmNetwork, path):
    """Write a layer manifest followed by row-major weight blocks."""
    s = net.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"fluidport-lstm {FORMAT_VERSION}\n")
        fh.write(f"n_inputs={s.n_inputs} n_outputs={s.n_outputs} hidden={s.hidden} "
                 f"dense_width={s.dense_width} dropout={','.join(repr(p) for p in s.dropout)}\n")
        for name, shp in s.param_shapes().items():
            value = np.asarray(net.params[name]).reshape(shp)
            fh.write(f"{name} {' '.join(str(d) for d in shp)}\n")
            fh.write(" ".join(f"{v:.17g}" for v in value.ravel()) + "\n")


def load_network(path) -> LstmNetwork:
    with open(path, encoding="ascii") as fh:
        magic, version = fh.readline().split()
        if magic != "fluidport-lstm" or int(version) != FORMAT_VERSION:
            raise ValueError(f"not a version-{FORMAT_VERSION} network file")
        fields = dict(item.split("=") for item in fh.readline().split())
        shape = LstmShape(
            n_inputs=int(fields["n_inputs"]), n_outputs=int(fields["n_outputs"]),
            hidden=int(fields["hidden"]), dense_width=int(fields["dense_width"]),
            dropout=tuple(float(v) for v in fields["dropout"].split(",")),
        )
        params = {}
        for name, shp in shape.param_shapes().items():
            header = fh.readline().split()
            if header[0] != name or tuple(int(d) for d in header[1:]) != shp:
                raise ValueError(f"unexpected block {header!r}, wanted {name} {shp}")
            params[name] = np.array(fh.readline().split(), dtype=float).reshape(shp)
    return LstmNetwork(shape, params)
