"""
Convolutional regression engine.

Tensors are real float64 arrays in (height, width, channels) layout; a batch
adds a leading axis. Convolution is a zero-padded cross-correlation with
stride one, evaluated one kernel offset at a time so memory stays at the
size of a single activation.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, DimensionError, EstimationError

logger = logging.getLogger(__name__)

OPTIMIZERS = ('adam', 'sgd')


def as_batch(x):
    """Promote a rank-3 tensor to a batch of one; pass batches through."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        return x[np.newaxis]
    if x.ndim != 4:
        raise DimensionError(f"Expected a (h, w, c) tensor or a batch of them, got shape {x.shape}.")
    return x


@dataclass(eq=False)
class ConvLayer:
    weights: np.ndarray
    bias: np.ndarray
    padding: int
    relu: bool = True

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).ravel()
        if self.weights.ndim != 4 or self.weights.shape[0] != self.weights.shape[1]:
            raise DimensionError(f"Weights must be (k, k, c_in, c_out), got {self.weights.shape}.")
        if self.bias.size != self.weights.shape[3]:
            raise DimensionError("One bias per filter is required.")
        if self.padding < 0:
            raise ConfigurationError("Padding cannot be negative.")

    @classmethod
    def he_uniform(cls, kernel_size, in_channels, num_filters, rng, relu=True, padding=None):
        fan_in = kernel_size * kernel_size * in_channels
        limit = math.sqrt(6.0 / fan_in)
        weights = rng.uniform(-limit, limit, size=(kernel_size, kernel_size, in_channels, num_filters))
        return cls(weights, np.zeros(num_filters), same_padding(kernel_size) if padding is None else padding, relu)

    @classmethod
    def zeros(cls, kernel_size, in_channels, num_filters, relu=True, padding=None):
        return cls(
            np.zeros((kernel_size, kernel_size, in_channels, num_filters)),
            np.zeros(num_filters),
            same_padding(kernel_size) if padding is None else padding,
            relu,
        )

    @property
    def kernel_size(self):
        return self.weights.shape[0]

    @property
    def in_channels(self):
        return self.weights.shape[2]

    @property
    def num_filters(self):
        return self.weights.shape[3]

    def output_hw(self, height, width):
        grow = 2 * self.padding - self.kernel_size + 1
        return height + grow, width + grow


def same_padding(kernel_size):
    if kernel_size % 2 == 0:
        raise ConfigurationError(f"Same padding needs an odd kernel size, got {kernel_size}.")
    return (kernel_size - 1) // 2


@dataclass(eq=False)
class CnnModel:
    """
    Hidden ReLU convolution layers followed by a linear single-filter projection.

    With ``residual`` set the network predicts a correction that is added to
    its input, so the input and output shapes must agree.
    """
    layers: list
    input_shape: tuple
    residual: bool = False

    def __post_init__(self):
        self.input_shape = tuple(int(d) for d in self.input_shape)
        if not self.layers:
            raise ConfigurationError("A model needs at least its projection layer.")
        if self.projection.num_filters != 1 or self.projection.relu:
            raise ConfigurationError("The projection must be a single linear filter.")
        height, width, channels = self.input_shape
        for layer in self.layers:
            if layer.in_channels != channels:
                raise DimensionError(
                    f"Layer expects {layer.in_channels} channels but receives {channels}."
                )
            height, width = layer.output_hw(height, width)
            if height <= 0 or width <= 0:
                raise DimensionError("A layer produces an empty output.")
            channels = layer.num_filters
        self.output_shape = (height, width, channels)
        if self.residual and self.output_shape != self.input_shape:
            raise DimensionError("A residual model must map its input shape onto itself.")

    @classmethod
    def build(cls, input_shape, rng, num_hidden=3, num_filters=64, kernel_size=9, residual=True):
        """He-initialised hidden stack; the projection starts at zero for residual models."""
        channels = input_shape[2]
        layers = []
        for _ in range(num_hidden):
            layers.append(ConvLayer.he_uniform(kernel_size, channels, num_filters, rng))
            channels = num_filters
        if residual:
            layers.append(ConvLayer.zeros(kernel_size, channels, 1, relu=False))
        else:
            layers.append(ConvLayer.he_uniform(kernel_size, channels, 1, rng, relu=False))
        return cls(layers, input_shape, residual)

    @classmethod
    def identity(cls, input_shape, kernel_size=9):
        """Pass-through network: no hidden layers and a centred delta kernel."""
        projection = ConvLayer.zeros(kernel_size, input_shape[2], 1, relu=False)
        centre = kernel_size // 2
        projection.weights[centre, centre, 0, 0] = 1.0
        return cls([projection], input_shape, residual=False)

    @property
    def projection(self):
        return self.layers[-1]

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend((layer.weights, layer.bias))
        return params

    def set_parameters(self, params):
        if len(params) != 2 * len(self.layers):
            raise DimensionError("Parameter list does not match the model layers.")
        for layer, weights, bias in zip(self.layers, params[0::2], params[1::2]):
            if weights.shape != layer.weights.shape or bias.shape != layer.bias.shape:
                raise DimensionError("Parameter shapes do not match the model layers.")
            layer.weights = np.array(weights, dtype=np.float64)
            layer.bias = np.array(bias, dtype=np.float64)

    def copy(self):
        layers = [ConvLayer(l.weights.copy(), l.bias.copy(), l.padding, l.relu) for l in self.layers]
        return CnnModel(layers, self.input_shape, self.residual)

    def architecture(self):
        return {
            'input_shape': list(self.input_shape),
            'residual': self.residual,
            'layers': [
                {
                    'kernel_size': l.kernel_size,
                    'in_channels': l.in_channels,
                    'num_filters': l.num_filters,
                    'padding': l.padding,
                    'relu': l.relu,
                }
                for l in self.layers
            ],
        }

    def predict(self, x, batch_size=256):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 3:
            return forward(self, x[np.newaxis])[0]
        outputs = [forward(self, x[i:i + batch_size]) for i in range(0, len(x), batch_size)]
        return np.concatenate(outputs) if outputs else np.empty((0,) + self.output_shape)


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 10
    mini_batch: int = 32
    learning_rate: float = 0.0005
    beta1: float = 0.9
    beta2: float = 0.999
    eps_bias: float = 1e-8
    validation_fraction: float = 0.15
    num_samples: int = 10000
    seed: int = 0
    optimizer: str = 'adam'

    def __post_init__(self):
        if not 0 < self.validation_fraction < 1:
            raise ConfigurationError("validation_fraction must lie strictly between 0 and 1.")
        if self.mini_batch < 1:
            raise ConfigurationError("mini_batch must be at least 1.")
        if self.max_epochs < 0:
            raise ConfigurationError("max_epochs cannot be negative.")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"optimizer must be one of {OPTIMIZERS}.")
        if self.eps_bias <= 0:
            raise ConfigurationError("eps_bias must be positive.")

    @classmethod
    def ce_defaults(cls, **overrides):
        return cls(**{'max_epochs': 10, 'mini_batch': 32, **overrides})

    @classmethod
    def cfo_defaults(cls, **overrides):
        return cls(**{'max_epochs': 60, 'mini_batch': 8, **overrides})


@dataclass(frozen=True, eq=False)
class AdamState:
    m: tuple
    v: tuple
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    lr: float = 0.0005
    eps_bias: float = 1e-8

    @classmethod
    def fresh(cls, params, beta1=0.9, beta2=0.999, lr=0.0005, eps_bias=1e-8):
        zeros = tuple(np.zeros_like(p, dtype=np.float64) for p in params)
        return cls(m=zeros, v=tuple(z.copy() for z in zeros), t=0,
                   beta1=beta1, beta2=beta2, lr=lr, eps_bias=eps_bias)

    @classmethod
    def from_config(cls, params, cfg):
        return cls.fresh(params, cfg.beta1, cfg.beta2, cfg.learning_rate, cfg.eps_bias)


class EpochLoss(NamedTuple):
    epoch: int
    train_loss: float
    validation_loss: float


class TrainResult(NamedTuple):
    model: CnnModel
    history: list


class TensorDataset(NamedTuple):
    inputs: np.ndarray
    targets: np.ndarray


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def _padded(x, padding):
    if padding == 0:
        return x
    return np.pad(x, ((0, 0), (padding, padding), (padding, padding), (0, 0)))


def conv2d_forward(x, layer):
    """Zero-padded cross-correlation plus bias; rank-3 in, rank-3 out (batches pass through)."""
    single = np.ndim(x) == 3
    x = as_batch(x)
    if x.shape[3] != layer.in_channels:
        raise DimensionError(f"Input has {x.shape[3]} channels, layer expects {layer.in_channels}.")
    out = _correlate(_padded(x, layer.padding), layer)
    return out[0] if single else out


def _correlate(xp, layer):
    k = layer.kernel_size
    out_h, out_w = xp.shape[1] - k + 1, xp.shape[2] - k + 1
    if out_h <= 0 or out_w <= 0:
        raise DimensionError("Kernel is larger than the padded input.")
    out = np.empty((xp.shape[0], out_h, out_w, layer.num_filters))
    out[...] = layer.bias
    for i in range(k):
        for j in range(k):
            out += xp[:, i:i + out_h, j:j + out_w, :] @ layer.weights[i, j]
    return out


def forward(model, x):
    out, _ = _forward_with_cache(model, as_batch(x))
    return out


def _forward_with_cache(model, x):
    cache = []
    activation = x
    for layer in model.layers:
        xp = _padded(activation, layer.padding)
        z = _correlate(xp, layer)
        cache.append((xp, z))
        activation = relu(z) if layer.relu else z
    if model.residual:
        activation = activation + x
    return activation, cache


def mse_loss(pred, target):
    """(1/T)·Σ_t ‖y_t − ŷ_t‖² over a batch of T tensors."""
    pred, target = as_batch(pred), as_batch(target)
    if pred.shape != target.shape:
        raise DimensionError(f"Prediction {pred.shape} and target {target.shape} differ.")
    return float(np.sum((pred - target) ** 2) / pred.shape[0])


def backward(model, x, target):
    """
    Loss and exact gradients of ``mse_loss`` for every parameter.

    Gradients come back in ``model.parameters()`` order.
    """
    x, target = as_batch(x), as_batch(target)
    if x.shape[1:] != model.input_shape:
        raise DimensionError(f"Input shape {x.shape[1:]} does not match model {model.input_shape}.")
    pred, cache = _forward_with_cache(model, x)
    if pred.shape != target.shape:
        raise DimensionError(f"Prediction {pred.shape} and target {target.shape} differ.")

    batch = x.shape[0]
    diff = pred - target
    loss = float(np.sum(diff ** 2) / batch)
    grad = 2.0 * diff / batch

    grads = [None] * (2 * len(model.layers))
    for index in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[index]
        xp, z = cache[index]
        if layer.relu:
            grad = grad * (z > 0)
        d_weights, d_bias, d_input = _correlate_backward(xp, layer, grad)
        grads[2 * index] = d_weights
        grads[2 * index + 1] = d_bias
        grad = d_input
    return loss, grads


def _correlate_backward(xp, layer, grad):
    k, pad = layer.kernel_size, layer.padding
    out_h, out_w = grad.shape[1], grad.shape[2]
    rows = grad.reshape(-1, layer.num_filters)

    d_weights = np.empty_like(layer.weights)
    d_xp = np.zeros_like(xp)
    for i in range(k):
        for j in range(k):
            window = xp[:, i:i + out_h, j:j + out_w, :]
            d_weights[i, j] = window.reshape(-1, layer.in_channels).T @ rows
            d_xp[:, i:i + out_h, j:j + out_w, :] += grad @ layer.weights[i, j].T
    d_bias = rows.sum(axis=0)
    if pad:
        d_xp = d_xp[:, pad:-pad, pad:-pad, :]
    return d_weights, d_bias, d_xp


def _check_pairs(params, grads):
    if len(params) != len(grads):
        raise DimensionError("One gradient is needed per parameter array.")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise DimensionError(f"Gradient shape {np.shape(g)} does not match parameter {np.shape(p)}.")


def adam_step(state, params, grads):
    """
    One Adam update; returns (new parameters, new state).

    The step counter is incremented before the bias correction.
    """
    _check_pairs(params, grads)
    if len(state.m) != len(params):
        raise DimensionError("Optimizer state does not match the parameter list.")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_params, new_m, new_v = [], [], []
    for w, g, m, v in zip(params, grads, state.m, state.v):
        g = np.asarray(g, dtype=np.float64)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_params.append(np.asarray(w, dtype=np.float64) - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_bias))
        new_m.append(m)
        new_v.append(v)
    return new_params, replace(state, m=tuple(new_m), v=tuple(new_v), t=t)


def sgd_step(params, grads, lr):
    _check_pairs(params, grads)
    return [np.asarray(w, dtype=np.float64) - lr * np.asarray(g, dtype=np.float64)
            for w, g in zip(params, grads)]


def evaluate(model, inputs, targets, batch_size=256):
    """Mean per-sample squared distance over a whole split."""
    if len(inputs) == 0:
        return float('nan')
    total = 0.0
    for start in range(0, len(inputs), batch_size):
        pred = forward(model, inputs[start:start + batch_size])
        total += float(np.sum((pred - targets[start:start + batch_size]) ** 2))
    return total / len(inputs)


def split_indices(count, validation_fraction, rng):
    """Shuffled (train, validation) index arrays; 10000 at 15% gives 8500/1500."""
    order = rng.permutation(count)
    num_validation = int(round(count * validation_fraction))
    if count > 1:
        num_validation = min(max(num_validation, 1), count - 1)
    else:
        num_validation = 0
    return order[num_validation:], order[:num_validation]


def train(model, dataset, cfg, rng=None):
    """
    Mini-batch training with a held-out validation split.

    The model is updated in place. ``history[0]`` holds the losses before the
    first update; the last partial mini-batch of every epoch is kept.
    """
    inputs = np.asarray(dataset.inputs, dtype=np.float64)
    targets = np.asarray(dataset.targets, dtype=np.float64)
    if len(inputs) == 0:
        raise DimensionError("Cannot train on an empty dataset.")
    if len(inputs) != len(targets):
        raise DimensionError("Inputs and targets differ in count.")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng

    train_idx, val_idx = split_indices(len(inputs), cfg.validation_fraction, rng)
    x_train, y_train = inputs[train_idx], targets[train_idx]
    x_val, y_val = inputs[val_idx], targets[val_idx]
    logger.info("Training on %d samples, validating on %d (%s, %d epochs, batch %d)",
                len(x_train), len(x_val), cfg.optimizer, cfg.max_epochs, cfg.mini_batch)

    history = [EpochLoss(0, evaluate(model, x_train, y_train), evaluate(model, x_val, y_val))]
    state = AdamState.from_config(model.parameters(), cfg)

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(x_train))
        running = 0.0
        for start in range(0, len(order), cfg.mini_batch):
            batch = order[start:start + cfg.mini_batch]
            loss, grads = backward(model, x_train[batch], y_train[batch])
            if not math.isfinite(loss):
                raise EstimationError(f"Training diverged in epoch {epoch}: loss is {loss}.")
            running += loss * len(batch)
            if cfg.optimizer == 'adam':
                params, state = adam_step(state, model.parameters(), grads)
            else:
                params = sgd_step(model.parameters(), grads, cfg.learning_rate)
            model.set_parameters(params)
        record = EpochLoss(epoch, running / len(x_train), evaluate(model, x_val, y_val))
        history.append(record)
        logger.info("Epoch %d/%d: train loss %.6g, validation loss %.6g",
                    epoch, cfg.max_epochs, record.train_loss, record.validation_loss)
    return TrainResult(model, history)
