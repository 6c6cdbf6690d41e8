"""Dense feed-forward networks with hand-rolled backpropagation.

Everything here is plain numpy: layers are (weights, bias, activation)
triples, training is mini-batch SGD on mean squared error, and a trained
network is an immutable pure function of its input.  Models serialize to a
versioned JSON document with lossless float encoding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InputError, ShapeError

MODEL_FORMAT = "mcnn-model-v1"

SIGMOID = "sigmoid"
LINEAR = "linear"
ACTIVATIONS = (SIGMOID, LINEAR)


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function; clipping keeps exp() in range and the tails saturate exactly."""
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == SIGMOID:
        return sigmoid(z)
    return z


def _activation_grad(kind: str, out: np.ndarray) -> np.ndarray:
    # Derivative expressed through the activation output itself.
    if kind == SIGMOID:
        return out * (1.0 - out)
    return np.ones_like(out)


def _check_activation(kind: str) -> None:
    if kind not in ACTIVATIONS:
        raise InputError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


@dataclass(frozen=True)
class LayerSpec:
    """Shape and activation of one dense layer."""

    in_dim: int
    out_dim: int
    activation: str = SIGMOID

    def __post_init__(self) -> None:
        if self.in_dim < 1 or self.out_dim < 1:
            raise InputError("layer dimensions must be positive")
        _check_activation(self.activation)


@dataclass
class Layer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("weights must be a matrix and bias a vector")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeError("bias length must equal the weight row count")
        _check_activation(self.activation)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class Network:
    """Ordered dense layers; a pure deterministic function once built."""

    layers: list[Layer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise InputError("network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ShapeError(
                    f"layer shapes do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )
        for layer in self.layers:
            if not (np.isfinite(layer.weights).all() and np.isfinite(layer.bias).all()):
                raise InputError("network entries must be finite")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def copy(self) -> "Network":
        return Network(
            [Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )


@dataclass
class LayerGrads:
    d_weights: np.ndarray
    d_bias: np.ndarray


Gradients = list


@dataclass
class Dataset:
    """Paired input/target rows with consistent dimensions."""

    inputs: np.ndarray  # (n, in_dim)
    targets: np.ndarray  # (n, out_dim)

    def __post_init__(self) -> None:
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise ShapeError("dataset inputs and targets must be 2-D arrays")
        if len(self.inputs) != len(self.targets):
            raise ShapeError("inputs and targets must have the same number of rows")
        if len(self.inputs) == 0:
            raise InputError("dataset must be non-empty")

    def __len__(self) -> int:
        return len(self.inputs)

    @classmethod
    def from_pairs(cls, pairs) -> "Dataset":
        xs, ts = zip(*pairs)
        return cls(np.array(xs, dtype=np.float64), np.array(ts, dtype=np.float64))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    batch_size: int = 32
    rng_seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if self.epochs < 1:
            raise InputError("epochs must be positive")
        if self.batch_size < 1:
            raise InputError("batch_size must be positive")


def init_network(specs: list[LayerSpec], seed: int) -> Network:
    """Build a network with uniform Glorot-range weights and zero biases.

    The same seed always yields a bit-identical network.
    """
    if not specs:
        raise InputError("need at least one layer spec")
    for prev, nxt in zip(specs, specs[1:]):
        if prev.out_dim != nxt.in_dim:
            raise ShapeError(f"specs do not chain: {prev.out_dim} -> {nxt.in_dim}")
    rng = np.random.default_rng(seed)
    layers = []
    for spec in specs:
        limit = math.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        weights = rng.uniform(-limit, limit, size=(spec.out_dim, spec.in_dim))
        layers.append(Layer(weights, np.zeros(spec.out_dim), spec.activation))
    return Network(layers)


def layered_specs(widths: list[int], hidden: str = SIGMOID, output: str = LINEAR) -> list[LayerSpec]:
    """Specs for a [w0 : w1 : ... : wn] stack, sigmoid hidden / linear output by default."""
    if len(widths) < 2:
        raise InputError("need at least an input and an output width")
    specs = []
    for i, (a, b) in enumerate(zip(widths, widths[1:])):
        act = output if i == len(widths) - 2 else hidden
        specs.append(LayerSpec(a, b, act))
    return specs


def _as_input_matrix(net: Network, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.in_dim:
        raise ShapeError(f"expected inputs of width {net.in_dim}, got shape {X.shape}")
    return X


def _forward_pass(net: Network, X: np.ndarray) -> list[np.ndarray]:
    """Row-wise forward over a batch; returns all layer outputs incl. the input."""
    outs = [X]
    a = X
    for layer in net.layers:
        z = a @ layer.weights.T + layer.bias
        a = _activate(layer.activation, z)
        outs.append(a)
    return outs


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.in_dim:
        raise ShapeError(f"expected input of length {net.in_dim}, got shape {x.shape}")
    return _forward_pass(net, x[None, :])[-1][0]


def forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Evaluate the network on a batch of row vectors."""
    return _forward_pass(net, _as_input_matrix(net, X))[-1]


def mse_loss(y: np.ndarray, t: np.ndarray) -> float:
    """Mean squared error over the components of one output vector."""
    y = np.asarray(y, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if y.shape != t.shape:
        raise ShapeError(f"shape mismatch {y.shape} vs {t.shape}")
    return float(np.mean((y - t) ** 2))


def _backprop_batch(net: Network, X: np.ndarray, T: np.ndarray) -> tuple[float, Gradients]:
    """Mean loss and mean gradients over a batch.

    Gradients are the exact partial derivatives of
    (1/B) * sum_i mse_loss(forward(net, x_i), t_i).
    """
    outs = _forward_pass(net, X)
    Y = outs[-1]
    if Y.shape != T.shape:
        raise ShapeError(f"target shape {T.shape} does not match output {Y.shape}")
    batch, out_dim = Y.shape
    loss = float(np.mean((Y - T) ** 2))

    grads: Gradients = [None] * len(net.layers)
    delta = 2.0 * (Y - T) / (out_dim * batch)
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        if layer.activation == SIGMOID:
            out = outs[k + 1]
            delta = delta * (out * (1.0 - out))
        grads[k] = LayerGrads(delta.T @ outs[k], delta.sum(axis=0))
        if k > 0:
            delta = delta @ layer.weights
    return loss, grads


def backprop(net: Network, x: np.ndarray, t: np.ndarray) -> tuple[float, Gradients]:
    """Loss and exact gradients of mse_loss(forward(net, x), t)."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if x.ndim != 1 or t.ndim != 1:
        raise ShapeError("backprop takes single input/target vectors")
    if x.shape[0] != net.in_dim:
        raise ShapeError(f"expected input of length {net.in_dim}")
    if t.shape[0] != net.out_dim:
        raise ShapeError(f"expected target of length {net.out_dim}")
    return _backprop_batch(net, x[None, :], t[None, :])


def _check_grads(net: Network, grads: Gradients) -> None:
    if len(grads) != len(net.layers):
        raise ShapeError("gradient count does not match the layer count")
    for layer, g in zip(net.layers, grads):
        if g.d_weights.shape != layer.weights.shape or g.d_bias.shape != layer.bias.shape:
            raise ShapeError("gradient shapes do not match the network")


def sgd_step(net: Network, grads: Gradients, learning_rate: float) -> Network:
    """One gradient-descent update; returns a new network."""
    if learning_rate < 0:
        raise InputError("learning_rate must be non-negative")
    _check_grads(net, grads)
    layers = [
        Layer(
            l.weights - learning_rate * g.d_weights,
            l.bias - learning_rate * g.d_bias,
            l.activation,
        )
        for l, g in zip(net.layers, grads)
    ]
    return Network(layers)


def dataset_loss(net: Network, data: Dataset) -> float:
    """Mean per-sample MSE over the whole dataset."""
    Y = forward_batch(net, data.inputs)
    return float(np.mean((Y - data.targets) ** 2))


def train(net: Network, data: Dataset, config: TrainConfig) -> tuple[Network, list[float]]:
    """Mini-batch SGD; returns the trained network and per-epoch mean loss.

    The input network is left untouched.  Each epoch optionally shuffles with
    a stream derived from ``config.rng_seed``, averages gradients over each
    mini-batch and applies one update per batch.  Fully deterministic for a
    fixed (net, data, config).
    """
    if data.inputs.shape[1] != net.in_dim:
        raise ShapeError(f"dataset input width {data.inputs.shape[1]} != {net.in_dim}")
    if data.targets.shape[1] != net.out_dim:
        raise ShapeError(f"dataset target width {data.targets.shape[1]} != {net.out_dim}")
    if config.batch_size > len(data):
        raise InputError("batch_size cannot exceed the dataset size")

    current = net.copy()
    rng = np.random.default_rng(config.rng_seed)
    n = len(data)
    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            _, grads = _backprop_batch(current, data.inputs[idx], data.targets[idx])
            for layer, g in zip(current.layers, grads):
                layer.weights -= config.learning_rate * g.d_weights
                layer.bias -= config.learning_rate * g.d_bias
        history.append(dataset_loss(current, data))
    return current, history


def argmax_decode(y: np.ndarray) -> int:
    """Index of the largest entry; ties go to the smallest index."""
    y = np.asarray(y)
    if y.size == 0:
        raise InputError("cannot decode an empty vector")
    return int(np.argmax(y))


# --- serialization ---------------------------------------------------------


def format_real(v: float) -> str:
    """Render a float with 17 significant digits (lossless for IEEE doubles)."""
    if not math.isfinite(v):
        raise InputError("cannot serialize non-finite values")
    return format(float(v), ".17g")


def _vector_json(v: np.ndarray) -> str:
    return "[" + ",".join(format_real(x) for x in v) + "]"


def _matrix_json(m: np.ndarray) -> str:
    return "[" + ",".join(_vector_json(row) for row in m) + "]"


def save_model(net: Network) -> bytes:
    """Serialize a network to its JSON wire form."""
    parts = []
    for layer in net.layers:
        parts.append(
            f'{{"in":{layer.in_dim},"out":{layer.out_dim},'
            f'"activation":"{layer.activation}",'
            f'"weights":{_matrix_json(layer.weights)},'
            f'"bias":{_vector_json(layer.bias)}}}'
        )
    doc = f'{{"format":"{MODEL_FORMAT}","layers":[' + ",\n".join(parts) + "]}"
    return doc.encode("utf-8")


def load_model(data: bytes | str) -> Network:
    """Parse a serialized network, validating format and shapes."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"unknown model format {doc.get('format') if isinstance(doc, dict) else doc!r}")
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise FormatError("model document has no layers")
    layers = []
    for i, raw in enumerate(raw_layers):
        try:
            in_dim, out_dim = int(raw["in"]), int(raw["out"])
            activation = raw["activation"]
            weights = np.array(raw["weights"], dtype=np.float64)
            bias = np.array(raw["bias"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"layer {i} is malformed: {exc}") from exc
        if activation not in ACTIVATIONS:
            raise FormatError(f"layer {i} has unknown activation {activation!r}")
        if weights.ndim != 2 or weights.shape != (out_dim, in_dim):
            raise FormatError(
                f"layer {i} declares {out_dim}x{in_dim} but weights have shape {weights.shape}"
            )
        if bias.shape != (out_dim,):
            raise FormatError(f"layer {i} bias length {bias.shape} != {out_dim}")
        if not (np.isfinite(weights).all() and np.isfinite(bias).all()):
            raise FormatError(f"layer {i} contains non-finite entries")
        layers.append(Layer(weights, bias, activation))
    try:
        return Network(layers)
    except (ShapeError, InputError) as exc:
        raise FormatError(str(exc)) from exc


def write_model(net: Network, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_model(net))


def read_model(path) -> Network:
    with open(path, "rb") as fh:
        return load_model(fh.read())
