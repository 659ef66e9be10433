"""Split conformal prediction with the thresholded-softmax (LABEL) score.

Scores are ``1 - p_y``. The calibrated threshold is the
``ceil((N + 1)(1 - alpha))``-th smallest calibration score, or ``inf`` when
that rank exceeds ``N``. A class belongs to the prediction set when its
score is at most the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data_model import ValidationError

SCORE_KIND = "LABEL"
# absorbs float error in (N + 1) * (1 - alpha), e.g. 1 - 0.07 = 0.9299999999999999
_RANK_SLACK = 1e-9


@dataclass(frozen=True)
class ConformalCalibration:
    q_hat: float
    alpha: float
    n_cal: int
    score_kind: str = SCORE_KIND

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.q_hat)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_cal": self.n_cal,
            "q_hat": "inf" if self.is_infinite else self.q_hat,
            "score_kind": self.score_kind,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConformalCalibration":
        q = obj["q_hat"]
        q_hat = math.inf if q == "inf" else float(q)
        kind = obj.get("score_kind", SCORE_KIND)
        if kind != SCORE_KIND:
            raise ValidationError(f"unsupported score kind {kind!r}")
        return cls(q_hat, float(obj["alpha"]), int(obj["n_cal"]), kind)


@dataclass(frozen=True)
class PredictionSet:
    members: tuple[int, ...]
    threshold_used: float

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, k) -> bool:
        return k in self.members


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def conformal_score(p, y) -> np.ndarray | float:
    """``1 - p[y]``; vectorized over rows when ``p`` is 2-D and ``y`` 1-D."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y)
    k = p.shape[-1]
    if np.any(y < 0) or np.any(y >= k):
        raise ValidationError(f"label out of range for {k} classes")
    if p.ndim == 1:
        return float(1.0 - p[int(y)])
    return 1.0 - p[np.arange(p.shape[0]), y.astype(np.int64)]


def quantile_rank(n: int, alpha: float) -> int:
    """1-based rank ``ceil((n + 1)(1 - alpha))`` of the calibrated score."""
    return math.ceil((n + 1) * (1.0 - alpha) - _RANK_SLACK)


def calibrate_quantile(scores, alpha: float) -> ConformalCalibration:
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size == 0:
        raise ValidationError("calibration scores are empty")
    _check_alpha(alpha)
    n = scores.size
    k = quantile_rank(n, alpha)
    if k > n:
        q_hat = math.inf
    else:
        q_hat = float(np.sort(scores, kind="stable")[k - 1])
    return ConformalCalibration(q_hat, float(alpha), n)


def calibrate(probs, labels, alpha: float) -> ConformalCalibration:
    return calibrate_quantile(conformal_score(np.asarray(probs, dtype=float), np.asarray(labels)), alpha)


def set_mask(probs, cal: ConformalCalibration, force_nonempty: bool = False) -> np.ndarray:
    """Boolean membership matrix (N, K) for a stack of probability vectors."""
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    if cal.is_infinite:
        mask = np.ones(probs.shape, dtype=bool)
    else:
        mask = (1.0 - probs) <= cal.q_hat
    if force_nonempty:
        empty = ~mask.any(axis=1)
        if empty.any():
            mask[np.flatnonzero(empty), np.argmax(probs[empty], axis=1)] = True
    return mask


def predict_set(p, cal: ConformalCalibration, force_nonempty: bool = False) -> PredictionSet:
    mask = set_mask(p, cal, force_nonempty)[0]
    return PredictionSet(tuple(int(k) for k in np.flatnonzero(mask)), cal.q_hat)


def predict_sets(probs, cal: ConformalCalibration, force_nonempty: bool = False) -> list[PredictionSet]:
    mask = set_mask(probs, cal, force_nonempty)
    return [PredictionSet(tuple(int(k) for k in np.flatnonzero(row)), cal.q_hat) for row in mask]


def coverage_bounds(alpha: float, n_cal: int) -> tuple[float, float]:
    """Marginal coverage band ``[1 - alpha, 1 - alpha + 1/(n_cal + 1)]``."""
    _check_alpha(alpha)
    if n_cal < 1:
        raise ValueError("n_cal must be >= 1")
    return 1.0 - alpha, 1.0 - alpha + 1.0 / (n_cal + 1)
