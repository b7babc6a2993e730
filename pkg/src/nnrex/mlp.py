"""Feed-forward network with per-layer activation capture and a small
self-contained trainer (Adam on weighted softmax cross-entropy).

Networks are immutable after training or loading and safe to share across
threads; training mutates a private instance only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset, class_weights_from_labels

HIDDEN_ACTIVATIONS = ("tanh", "relu", "elu")
ELU_ALPHA = 1.0

WEIGHTS_SCHEMA_VERSION = 1


class MlpError(ValueError):
    """Raised for structural problems in a network or weight file."""


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str


@dataclass(frozen=True)
class Mlp:
    """Stack of dense layers; hidden activations in {tanh, relu, elu},
    final activation fixed to softmax."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        if not self.layers:
            raise MlpError("network needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        for i, layer in enumerate(self.layers):
            if layer.weight.ndim != 2 or layer.bias.shape != (layer.weight.shape[0],):
                raise MlpError(f"layer {i}: weight/bias shape mismatch")
            if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
                raise MlpError(f"layer {i}: non-finite parameters")
            if i + 1 < len(self.layers):
                if layer.activation not in HIDDEN_ACTIVATIONS:
                    raise MlpError(f"layer {i}: unknown hidden activation {layer.activation!r}")
                if self.layers[i + 1].weight.shape[1] != layer.weight.shape[0]:
                    raise MlpError(f"layer {i}->{i + 1}: dimensions do not chain")
            else:
                if layer.activation != "softmax":
                    raise MlpError("final activation must be softmax")

    @property
    def input_width(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def num_classes(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def num_hidden(self) -> int:
        return len(self.layers) - 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    seed: int = 0
    class_weighted: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise MlpError("epochs must be >= 1")
        if self.batch_size < 1:
            raise MlpError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise MlpError("learning_rate must be positive")


def _apply_activation(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "elu":
        return np.where(z > 0, z, ELU_ALPHA * np.expm1(z))
    raise MlpError(f"unknown activation {kind!r}")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Class-probability output; accepts a single vector or a batch."""
    return activations(net, x, net.num_hidden + 1)


def activations(net: Mlp, x: np.ndarray, i: int) -> np.ndarray:
    """Output of layer i: i=0 is the input itself, i=d+1 the softmax output,
    otherwise the post-activation values of hidden layer i."""
    if not 0 <= i <= net.num_hidden + 1:
        raise MlpError(f"layer index {i} out of range [0, {net.num_hidden + 1}]")
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    h = np.atleast_2d(x)
    if h.shape[1] != net.input_width:
        raise MlpError(f"input width {h.shape[1]} does not match network input {net.input_width}")
    # i == d+1 runs all len(layers) == d+1 layers, ending in the softmax
    for k in range(i):
        z = h @ net.layers[k].weight.T + net.layers[k].bias
        if k == len(net.layers) - 1:
            h = _softmax(z)
        else:
            h = _apply_activation(z, net.layers[k].activation)
    return h[0] if squeeze else h


def predict_labels(net: Mlp, X: np.ndarray) -> np.ndarray:
    """argmax of the output distribution; ties go to the lowest class index."""
    probs = np.atleast_2d(forward(net, X))
    return probs.argmax(axis=1)


def _glorot_init(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def _loss_and_grads(params, acts_kind, Xb, yb, sample_w):
    """Weighted softmax cross-entropy and its parameter gradients.

    Loss = sum_i w_i * CE_i / sum_i w_i, so balanced weights reduce to the
    plain mean.
    """
    hs = [Xb]
    zs = []
    h = Xb
    n_layers = len(params)
    for k, (W, b) in enumerate(params):
        z = h @ W.T + b
        zs.append(z)
        if k == n_layers - 1:
            h = _softmax(z)
        else:
            h = _apply_activation(z, acts_kind[k])
        hs.append(h)
    probs = hs[-1]
    n = Xb.shape[0]
    w_total = sample_w.sum()
    eps = 1e-12
    loss = -(sample_w * np.log(probs[np.arange(n), yb] + eps)).sum() / w_total

    grads = []
    delta = probs.copy()
    delta[np.arange(n), yb] -= 1.0
    delta *= (sample_w / w_total)[:, None]
    for k in range(n_layers - 1, -1, -1):
        W, b = params[k]
        gW = delta.T @ hs[k]
        gb = delta.sum(axis=0)
        grads.append((gW, gb))
        if k > 0:
            delta = delta @ W
            z = zs[k - 1]
            kind = acts_kind[k - 1]
            if kind == "tanh":
                delta *= 1.0 - hs[k] ** 2
            elif kind == "relu":
                delta *= (z > 0).astype(float)
            elif kind == "elu":
                delta *= np.where(z > 0, 1.0, ELU_ALPHA * np.exp(z))
    grads.reverse()
    return loss, grads


def train(
    ds: Dataset,
    hidden_sizes: list[int] | tuple[int, ...],
    activation: str = "tanh",
    cfg: TrainConfig = TrainConfig(),
    loss_out: list[float] | None = None,
) -> Mlp:
    """Train a new network on the dataset with minibatch Adam.

    Deterministic for a fixed config seed. Raises :class:`TrainingDiverged`
    when the epoch loss stops being finite. Mean per-epoch losses are
    appended to ``loss_out`` when given.
    """
    if not hidden_sizes:
        raise MlpError("hidden_sizes must be nonempty")
    if activation not in HIDDEN_ACTIVATIONS:
        raise MlpError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(cfg.seed)
    sizes = [ds.num_features, *hidden_sizes, ds.num_classes]
    params = []
    for k in range(len(sizes) - 1):
        params.append((_glorot_init(rng, sizes[k + 1], sizes[k]), np.zeros(sizes[k + 1])))
    acts_kind = [activation] * len(hidden_sizes)

    if cfg.class_weighted:
        cw = class_weights_from_labels(ds.labels, ds.num_classes)
    else:
        cw = np.ones(ds.num_classes)
    weights = cw[ds.labels]

    m_state = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    v_state = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    t = 0
    n = ds.num_samples
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = _loss_and_grads(
                params, acts_kind, ds.features[batch], ds.labels[batch], weights[batch]
            )
            epoch_loss += loss * len(batch)
            t += 1
            new_params = []
            for k, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
                mW, mb = m_state[k]
                vW, vb = v_state[k]
                mW = cfg.beta1 * mW + (1 - cfg.beta1) * gW
                mb = cfg.beta1 * mb + (1 - cfg.beta1) * gb
                vW = cfg.beta2 * vW + (1 - cfg.beta2) * gW**2
                vb = cfg.beta2 * vb + (1 - cfg.beta2) * gb**2
                m_state[k] = (mW, mb)
                v_state[k] = (vW, vb)
                correct1 = 1 - cfg.beta1**t
                correct2 = 1 - cfg.beta2**t
                step_W = cfg.learning_rate * (mW / correct1) / (np.sqrt(vW / correct2) + cfg.epsilon)
                step_b = cfg.learning_rate * (mb / correct1) / (np.sqrt(vb / correct2) + cfg.epsilon)
                new_params.append((W - step_W, b - step_b))
            params = new_params
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(epoch)
        if loss_out is not None:
            loss_out.append(epoch_loss / n)

    layers = [Layer(W, b, acts_kind[k]) for k, (W, b) in enumerate(params[:-1])]
    layers.append(Layer(params[-1][0], params[-1][1], "softmax"))
    return Mlp(tuple(layers))


def save(net: Mlp, path) -> None:
    payload = {
        "version": WEIGHTS_SCHEMA_VERSION,
        "input_width": net.input_width,
        "layers": [
            {
                "activation": layer.activation,
                "rows": layer.weight.shape[0],
                "cols": layer.weight.shape[1],
                "weights": [float(v) for v in layer.weight.ravel()],
                "bias": [float(v) for v in layer.bias],
            }
            for layer in net.layers
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load(path) -> Mlp:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MlpError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("version") != WEIGHTS_SCHEMA_VERSION:
        raise MlpError(f"{path}: unsupported weight-file version")
    try:
        layers = []
        for spec in payload["layers"]:
            rows, cols = int(spec["rows"]), int(spec["cols"])
            W = np.array(spec["weights"], dtype=float).reshape(rows, cols)
            b = np.array(spec["bias"], dtype=float)
            layers.append(Layer(W, b, str(spec["activation"])))
        net = Mlp(tuple(layers))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MlpError):
            raise
        raise MlpError(f"{path}: malformed weight file: {exc}") from None
    if net.input_width != int(payload["input_width"]):
        raise MlpError(f"{path}: declared input width does not match layer shapes")
    return net
