"""A small softmax classifier trained by mini-batch SGD on soft targets.

The model is multinomial logistic regression, optionally with one tanh
hidden layer. Training records the full training-set logits after every
epoch, which is what pseudo-label formation consumes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .data_model import (
    Dataset,
    NumericalError,
    PredictionHistory,
    ValidationError,
    make_rng,
)

log = logging.getLogger(__name__)

EPS = 1e-12
INIT_SCALE = 0.01
ACTIVATION = "tanh"
LOSSES = ("cross_entropy_soft", "mae")
LOSS_ALIASES = {"ce": "cross_entropy_soft", "cross_entropy": "cross_entropy_soft", "mae": "mae"}


@dataclass(frozen=True)
class ModelParams:
    """Weights ``(W, b)`` per layer; ``W`` has shape (out, in)."""

    input_dim: int
    hidden_dim: int
    num_classes: int
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str = ACTIVATION

    def __post_init__(self):
        dims = [self.input_dim] + ([self.hidden_dim] if self.hidden_dim else []) + [self.num_classes]
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValidationError("number of layers does not match the architecture")
        ws, bs = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.array(w, dtype=float)
            b = np.array(b, dtype=float)
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValidationError(f"layer {i} has shape {w.shape}/{b.shape}, expected {(dims[i + 1], dims[i])}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericalError(f"layer {i} has non-finite parameters")
            w.flags.writeable = False
            b.flags.writeable = False
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def with_flat(self, vec: np.ndarray) -> "ModelParams":
        ws, bs, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            ws.append(vec[pos:pos + w.size].reshape(w.shape))
            pos += w.size
            bs.append(vec[pos:pos + b.size].reshape(b.shape))
            pos += b.size
        return ModelParams(self.input_dim, self.hidden_dim, self.num_classes, tuple(ws), tuple(bs), self.activation)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 1e-4
    batch_size: int = 256
    loss: str = "cross_entropy_soft"
    seed: int = 0

    def __post_init__(self):
        loss = LOSS_ALIASES.get(self.loss, self.loss)
        if loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {LOSSES}")
        object.__setattr__(self, "loss", loss)
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def init_model(input_dim: int, hidden_dim: int, num_classes: int, seed: int) -> ModelParams:
    """Draw parameters as ``0.01 * N(0, 1)``; weights and biases alike."""
    if input_dim < 1:
        raise ValueError(f"input_dim must be >= 1, got {input_dim}")
    if hidden_dim < 0:
        raise ValueError(f"hidden_dim must be >= 0, got {hidden_dim}")
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    rng = make_rng(seed, 0)
    dims = [input_dim] + ([hidden_dim] if hidden_dim else []) + [num_classes]
    ws, bs = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        ws.append(INIT_SCALE * rng.standard_normal((d_out, d_in)))
        bs.append(INIT_SCALE * rng.standard_normal(d_out))
    return ModelParams(input_dim, hidden_dim, num_classes, tuple(ws), tuple(bs))


def softmax(z) -> np.ndarray:
    """Row-wise softmax along the last axis, stabilized by max subtraction."""
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)):
        raise ValidationError("softmax input contains NaN")
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def log_softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def _check_pair(p, target):
    p = np.asarray(p, dtype=float)
    target = np.asarray(target, dtype=float)
    if p.shape != target.shape:
        raise ValidationError(f"dimension mismatch: prediction {p.shape} vs target {target.shape}")
    return p, target


def cross_entropy_soft(p, target):
    """``-sum_k target_k * log(max(p_k, 1e-12))``; row-wise for 2-D input."""
    p, target = _check_pair(p, target)
    return -np.sum(target * np.log(np.maximum(p, EPS)), axis=-1)


def mae_loss(p, target):
    p, target = _check_pair(p, target)
    return np.sum(np.abs(p - target), axis=-1)


def _forward(model: ModelParams, x: np.ndarray):
    acts = [x]
    h = x
    n_layers = len(model.weights)
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = h @ w.T + b
        if i < n_layers - 1:
            h = np.tanh(h)
        acts.append(h)
    return h, acts


def predict_logits(model: ModelParams, features) -> np.ndarray:
    """Logits for one feature vector (shape (D,)) or a batch (shape (N, D))."""
    x = np.asarray(features, dtype=float)
    single = x.ndim == 1
    x2 = x[None, :] if single else x
    if x2.ndim != 2 or x2.shape[1] != model.input_dim:
        raise ValidationError(f"feature dimension {x2.shape[-1]} does not match model input_dim {model.input_dim}")
    z, _ = _forward(model, x2)
    return z[0] if single else z


def loss_and_grads(model: ModelParams, x: np.ndarray, targets: np.ndarray, loss: str):
    """Mean batch loss and its gradient, flattened in ``ModelParams.flat`` order."""
    loss = LOSS_ALIASES.get(loss, loss)
    z, acts = _forward(model, x)
    if not np.all(np.isfinite(z)):
        raise NumericalError("non-finite logits")
    p = softmax(z)
    n = x.shape[0]
    if loss == "cross_entropy_soft":
        # clipped log only matters when p underflows; the gradient uses the unclipped form
        values = cross_entropy_soft(p, targets)
        dz = p * targets.sum(axis=1, keepdims=True) - targets
    elif loss == "mae":
        values = mae_loss(p, targets)
        g = np.sign(p - targets)
        dz = p * (g - np.sum(p * g, axis=1, keepdims=True))
    else:
        raise ValueError(f"unknown loss {loss!r}")
    dz /= n

    grads_w: list[np.ndarray] = []
    grads_b: list[np.ndarray] = []
    delta = dz
    for i in range(len(model.weights) - 1, -1, -1):
        a_in = acts[i]
        grads_w.append(delta.T @ a_in)
        grads_b.append(delta.sum(axis=0))
        if i > 0:
            delta = (delta @ model.weights[i]) * (1.0 - a_in ** 2)
    grads_w.reverse()
    grads_b.reverse()
    flat = np.concatenate([a.ravel() for pair in zip(grads_w, grads_b) for a in pair])
    return float(np.mean(values)), flat


def _align_targets(data: Dataset, targets) -> np.ndarray:
    if isinstance(targets, Mapping):
        missing = [i for i in data.ids if i not in targets]
        if missing:
            raise ValidationError(f"targets missing for {len(missing)} instances, e.g. {missing[0]}")
        arr = np.array([targets[i] for i in data.ids], dtype=float)
    elif hasattr(targets, "as_mapping"):
        return _align_targets(data, targets.as_mapping())
    else:
        arr = np.asarray(targets, dtype=float)
    if arr.shape != (len(data), data.num_classes):
        raise ValidationError(f"targets have shape {arr.shape}, expected {(len(data), data.num_classes)}")
    return arr


def train(
    model: ModelParams,
    data: Dataset,
    targets,
    cfg: TrainConfig,
    progress: Optional[callable] = None,
) -> tuple[ModelParams, PredictionHistory]:
    """Run ``cfg.epochs`` epochs of SGD and record post-epoch training logits.

    ``targets`` is an (N, K) array aligned with ``data`` or a mapping from
    instance id to a length-K vector. Each epoch draws a fresh permutation
    from the stream seeded by ``cfg.seed``; the last batch may be short.
    """
    x = data.features
    if x.shape[1] != model.input_dim:
        raise ValidationError(f"dataset has {x.shape[1]} features, model expects {model.input_dim}")
    if data.num_classes != model.num_classes:
        raise ValidationError("dataset and model disagree on the number of classes")
    if len(data) == 0:
        raise ValidationError("cannot train on an empty dataset")
    y = _align_targets(data, targets)

    rng = make_rng(cfg.seed, 1)
    theta = model.flat().copy()
    current = model
    n = len(data)
    history = np.empty((n, cfg.epochs, model.num_classes))
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):
                try:
                    value, grad = loss_and_grads(current, x[idx], y[idx], cfg.loss)
                except NumericalError:
                    value, grad = np.nan, None
                if not np.isfinite(value) or not np.all(np.isfinite(grad)):
                    raise NumericalError(f"non-finite loss at epoch {epoch + 1}, batch {b + 1}")
                theta -= cfg.learning_rate * grad
            if not np.all(np.isfinite(theta)):
                raise NumericalError(f"parameters diverged at epoch {epoch + 1}, batch {b + 1}")
            current = current.with_flat(theta)
        with np.errstate(over="ignore", invalid="ignore"):
            history[:, epoch, :] = predict_logits(current, x)
        if not np.all(np.isfinite(history[:, epoch, :])):
            raise NumericalError(f"non-finite training logits after epoch {epoch + 1}")
        if progress is not None:
            progress(epoch + 1, current)
        log.debug("epoch %d/%d done", epoch + 1, cfg.epochs)
    return current, PredictionHistory(data.ids, history)


def dataset_loss(model: ModelParams, data: Dataset, targets, loss: str = "cross_entropy_soft") -> float:
    y = _align_targets(data, targets)
    p = softmax(predict_logits(model, data.features))
    fn = cross_entropy_soft if LOSS_ALIASES.get(loss, loss) == "cross_entropy_soft" else mae_loss
    return float(np.mean(fn(p, y)))
