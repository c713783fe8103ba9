"""Fully connected autoencoder trained from scratch to reconstruct frames.

The production architecture is 20 -> 12 -> 20: a tanh hidden layer
narrow enough to force the network to encode inter-sensor structure,
and an identity output layer so reconstructions can follow normalized
values outside [0, 1] during faults. ``forward``/``loss``/``gradient``
work for any consistent layer stack, which keeps toy networks usable
as test oracles.

Loss is the mean squared error over every sensor of every frame in the
batch. Gradients are exact analytic backpropagation; training uses
mini-batch Adam with best-validation checkpointing and early stopping.
All randomness flows from explicit seeds, so init, batching, and
training are pure functions of (data, config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import as_matrix
from .errors import (
    ConstantTargetError,
    DimensionMismatchError,
    DivergedLossError,
    EmptyBatchError,
    EmptyDatasetError,
)
from .metrics import r_squared

INPUT_DIM = 20
BOTTLENECK_DIM = 12

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class Layer:
    """One dense layer: out = activation(weights @ x + biases)."""

    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str  # "tanh" | "identity"

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValueError(f"inconsistent layer shapes: weights {w.shape}, biases {b.shape}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)


def _identity(x: np.ndarray) -> np.ndarray:
    return x


def _identity_grad(out: np.ndarray) -> np.ndarray:
    return np.ones_like(out)


def _tanh_grad(out: np.ndarray) -> np.ndarray:
    # derivative of tanh expressed through its output: 1 - tanh(x)^2
    return 1.0 - out * out


_ACTIVATIONS = {
    "tanh": (np.tanh, _tanh_grad),
    "identity": (_identity, _identity_grad),
}


@dataclass(frozen=True)
class AutoencoderModel:
    """Stack of dense layers mapping a frame back onto itself."""

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("model needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.weights.shape[1] != prev.weights.shape[0]:
                raise ValueError("adjacent layer shapes do not chain")
        for layer in self.layers:
            if not (np.all(np.isfinite(layer.weights)) and np.all(np.isfinite(layer.biases))):
                raise ValueError("all parameters must be finite")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    @property
    def bottleneck_dim(self) -> int:
        return min(layer.weights.shape[0] for layer in self.layers)

    def copy(self) -> "AutoencoderModel":
        return AutoencoderModel(
            tuple(Layer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers)
        )


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent hyperparameters; the defaults are conventional."""

    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    early_stop_patience: int = 25

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.early_stop_patience < 1:
            raise ValueError("epochs, batch_size, and early_stop_patience must be >= 1")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning_rate must be finite and positive")


@dataclass(frozen=True)
class TrainTrace:
    """Per-epoch train/validation losses for the completed epochs."""

    train_loss: tuple[float, ...]
    validation_loss: tuple[float, ...]
    best_epoch: int = 0

    def __len__(self) -> int:
        return len(self.train_loss)


def init_model(seed: int, input_dim: int = INPUT_DIM, bottleneck_dim: int = BOTTLENECK_DIM) -> AutoencoderModel:
    """Deterministic scaled-uniform initialization of the encoder/decoder pair.

    Weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    """
    rng = np.random.default_rng(seed)

    def dense(n_out: int, n_in: int, activation: str) -> Layer:
        bound = math.sqrt(6.0 / (n_in + n_out))
        return Layer(
            weights=rng.uniform(-bound, bound, size=(n_out, n_in)),
            biases=np.zeros(n_out),
            activation=activation,
        )

    return AutoencoderModel(
        (
            dense(bottleneck_dim, input_dim, "tanh"),
            dense(input_dim, bottleneck_dim, "identity"),
        )
    )


def forward(model: AutoencoderModel, frame) -> np.ndarray:
    """Reconstruct one frame (1-D) or a batch of frames (2-D)."""
    x = np.asarray(as_matrix(frame), dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise DimensionMismatchError(
            f"expected {model.input_dim} values per frame, got {x.shape[-1]}"
        )
    a = x
    for layer in model.layers:
        act, _ = _ACTIVATIONS[layer.activation]
        a = act(a @ layer.weights.T + layer.biases)
    return a


def loss(model: AutoencoderModel, batch) -> float:
    """Mean squared reconstruction error over all sensors and frames."""
    x = np.atleast_2d(as_matrix(batch))
    if x.size == 0:
        raise EmptyBatchError("loss requires a non-empty batch")
    recon = forward(model, x)
    return float(np.mean((recon - x) ** 2))


def gradient(model: AutoencoderModel, batch) -> list[tuple[np.ndarray, np.ndarray]]:
    """Analytic gradient of ``loss`` for every parameter.

    Returns one (d_weights, d_biases) pair per layer. The backward pass
    mirrors the forward chain: with loss L = mean((y - x)^2) over N*D
    entries, dL/dy = 2 (y - x) / (N*D), then each layer multiplies in
    its activation derivative and propagates through its weights.
    """
    x = np.atleast_2d(as_matrix(batch))
    if x.size == 0:
        raise EmptyBatchError("gradient requires a non-empty batch")
    if x.shape[1] != model.input_dim:
        raise DimensionMismatchError(
            f"expected {model.input_dim} values per frame, got {x.shape[1]}"
        )

    # forward pass, keeping each layer's output
    outputs = [x]
    a = x
    for layer in model.layers:
        act, _ = _ACTIVATIONS[layer.activation]
        a = act(a @ layer.weights.T + layer.biases)
        outputs.append(a)

    delta = 2.0 * (outputs[-1] - x) / x.size  # dL/d(last output)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)  # type: ignore[list-item]
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        _, act_grad = _ACTIVATIONS[layer.activation]
        delta = delta * act_grad(outputs[i + 1])  # now dL/d(pre-activation)
        grads[i] = (delta.T @ outputs[i], delta.sum(axis=0))
        if i > 0:
            delta = delta @ layer.weights
    return grads


def train(
    model: AutoencoderModel,
    train_data,
    validation_data,
    config: TrainConfig,
) -> tuple[AutoencoderModel, TrainTrace]:
    """Mini-batch Adam descent with best-validation checkpointing.

    Returns the parameters that achieved the lowest validation loss and
    the per-epoch loss trace. Stops early after ``early_stop_patience``
    epochs without validation improvement. Deterministic for a fixed
    (data, config) pair; the input model is left untouched.
    """
    x_train = np.atleast_2d(as_matrix(train_data))
    x_val = np.atleast_2d(as_matrix(validation_data))
    if x_train.size == 0 or x_val.size == 0:
        raise EmptyDatasetError("training and validation data must be non-empty")

    model = model.copy()  # private working copy; the caller's model stays intact
    weights = [layer.weights for layer in model.layers]
    biases = [layer.biases for layer in model.layers]

    rng = np.random.default_rng(config.seed)
    m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(weights, biases)]
    v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(weights, biases)]
    step = 0

    best_model = model.copy()
    best_val = math.inf
    best_epoch = 0
    stale_epochs = 0
    train_losses: list[float] = []
    val_losses: list[float] = []

    n = x_train.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = x_train[order[start:start + config.batch_size]]
            grads = gradient(model, batch)
            step += 1
            bias1 = 1.0 - ADAM_BETA1 ** step
            bias2 = 1.0 - ADAM_BETA2 ** step
            for i, (dw, db) in enumerate(grads):
                for param, grad, mom, sq in (
                    (weights[i], dw, m[i][0], v[i][0]),
                    (biases[i], db, m[i][1], v[i][1]),
                ):
                    mom *= ADAM_BETA1
                    mom += (1.0 - ADAM_BETA1) * grad
                    sq *= ADAM_BETA2
                    sq += (1.0 - ADAM_BETA2) * grad * grad
                    param -= config.learning_rate * (mom / bias1) / (np.sqrt(sq / bias2) + ADAM_EPS)

        epoch_train = loss(model, x_train)
        epoch_val = loss(model, x_val)
        if not (math.isfinite(epoch_train) and math.isfinite(epoch_val)):
            raise DivergedLossError(
                f"loss became non-finite at epoch {epoch + 1}; lower the learning rate"
            )
        train_losses.append(epoch_train)
        val_losses.append(epoch_val)

        if epoch_val < best_val:
            best_val = epoch_val
            best_model = model.copy()
            best_epoch = epoch
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= config.early_stop_patience:
                break

    return best_model, TrainTrace(tuple(train_losses), tuple(val_losses), best_epoch)


def reconstruction_r2(model: AutoencoderModel, data) -> np.ndarray:
    """Per-sensor coefficient of determination of the reconstruction.

    Raises ConstantTargetError naming any sensor whose values have zero
    variance in ``data`` (the coefficient is undefined there).
    """
    x = np.atleast_2d(as_matrix(data))
    if x.size == 0:
        raise EmptyDatasetError("reconstruction_r2 requires a non-empty dataset")
    recon = forward(model, x)
    sst = np.sum((x - x.mean(axis=0)) ** 2, axis=0)
    constant = np.flatnonzero(sst == 0.0)
    if constant.size:
        raise ConstantTargetError(
            f"zero-variance sensors {constant.tolist()}: R^2 is undefined"
        )
    sse = np.sum((x - recon) ** 2, axis=0)
    return 1.0 - sse / sst


def reconstruction_r2_by_sensor(model: AutoencoderModel, data) -> np.ndarray:
    """Like ``reconstruction_r2`` but marks zero-variance sensors with NaN."""
    x = np.atleast_2d(as_matrix(data))
    if x.size == 0:
        raise EmptyDatasetError("reconstruction_r2 requires a non-empty dataset")
    recon = forward(model, x)
    out = np.empty(x.shape[1])
    for s in range(x.shape[1]):
        try:
            out[s] = r_squared(x[:, s], recon[:, s])
        except ConstantTargetError:
            out[s] = np.nan
    return out
