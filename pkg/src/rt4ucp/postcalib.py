"""Temperature scaling, negative log-likelihood and expected calibration error."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifier import log_softmax
from .data_model import ValidationError, check_logits

T_MIN = 0.05
T_MAX = 20.0
LOG_T_TOL = 1e-4
DEFAULT_BINS = 15
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Temperature:
    t: float

    def __post_init__(self):
        if not self.t > 0 or not math.isfinite(self.t):
            raise ValueError(f"temperature must be a positive finite number, got {self.t}")


@dataclass(frozen=True)
class ReliabilityReport:
    bin_edges: np.ndarray
    counts: np.ndarray
    mean_conf: np.ndarray
    accuracy: np.ndarray
    ece: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def apply_temperature(z, temp) -> np.ndarray:
    t = temp.t if isinstance(temp, Temperature) else float(temp)
    if not t > 0:
        raise ValueError(f"temperature must be > 0, got {t}")
    return np.asarray(z, dtype=float) / t


def nll(logits, labels, t: float = 1.0) -> float:
    """Mean negative log-likelihood of ``softmax(logits / t)``."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    labels = np.asarray(labels, dtype=np.int64)
    lp = log_softmax(logits / t)
    return float(-np.mean(lp[np.arange(labels.shape[0]), labels]))


def fit_temperature(val_logits, val_labels) -> Temperature:
    """Golden-section search for the NLL-minimizing temperature in log space.

    The search runs on ``log t`` over ``[log 0.05, log 20]`` until the
    bracket is narrower than 1e-4. The returned temperature is the best of
    the bracket midpoint and ``t = 1``, so fitting never increases the
    validation NLL relative to leaving the logits untouched.
    """
    z = check_logits(np.atleast_2d(np.asarray(val_logits, dtype=float)))
    y = np.asarray(val_labels, dtype=np.int64)
    if z.shape[0] == 0:
        raise ValidationError("validation set is empty")
    if z.shape[0] != y.shape[0]:
        raise ValidationError("validation logits and labels differ in length")
    if np.unique(y).size < 2:
        raise ValidationError("temperature fitting needs at least two classes present in the validation labels")

    def f(u: float) -> float:
        return nll(z, y, math.exp(u))

    lo, hi = math.log(T_MIN), math.log(T_MAX)
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > LOG_T_TOL:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
    u = 0.5 * (lo + hi)
    if f(0.0) <= f(u):
        u = 0.0
    return Temperature(math.exp(u))


def expected_calibration_error(probs, labels, bins: int = DEFAULT_BINS) -> ReliabilityReport:
    """Bin top-class confidence into equal-width bins on [0, 1].

    Bins are ``[lo, hi)`` except the last, which also holds confidence 1.0.
    Empty bins report ``nan`` for mean confidence and accuracy.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    labels = np.asarray(labels, dtype=np.int64)
    if probs.shape[0] == 0:
        raise ValidationError("no predictions to evaluate")
    conf = probs.max(axis=1)
    correct = (probs.argmax(axis=1) == labels).astype(float)
    idx = np.minimum((conf * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    sum_conf = np.bincount(idx, weights=conf, minlength=bins)
    sum_acc = np.bincount(idx, weights=correct, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_conf = np.where(counts > 0, sum_conf / counts, np.nan)
        acc = np.where(counts > 0, sum_acc / counts, np.nan)
    gaps = np.abs(sum_acc - sum_conf)
    ece = float(gaps.sum() / probs.shape[0])
    edges = np.linspace(0.0, 1.0, bins + 1)
    return ReliabilityReport(edges, counts, mean_conf, acc, ece)
