"""Study-level fusion of instance predictions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .classifier import softmax
from .data_model import ValidationError, check_logits

METHODS = ("logit_sum", "weighted_prob")


@dataclass(frozen=True)
class StudyPrediction:
    study_id: str
    prob: np.ndarray
    n_instances: int
    method: str


def aggregate_logits(logits, mean: bool = False) -> np.ndarray:
    """Softmax of the summed instance logits (of their mean when ``mean``)."""
    z = check_logits(np.atleast_2d(np.asarray(logits, dtype=float)))
    if z.shape[0] == 0:
        raise ValidationError("cannot aggregate an empty study")
    total = z.sum(axis=0)
    if mean:
        total = total / z.shape[0]
    return softmax(total)


def aggregate_weighted(probs, weights) -> np.ndarray:
    p = np.atleast_2d(np.asarray(probs, dtype=float))
    w = np.asarray(weights, dtype=float).ravel()
    if p.shape[0] == 0:
        raise ValidationError("cannot aggregate an empty study")
    if w.shape[0] != p.shape[0]:
        raise ValidationError(f"{p.shape[0]} predictions but {w.shape[0]} weights")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValidationError("weights sum to zero")
    return (w @ p) / total


def group_by_study(study_ids: Iterable[str]) -> dict[str, list[int]]:
    """Map each study id to the positions of its instances, in input order."""
    groups: dict[str, list[int]] = {}
    for i, s in enumerate(study_ids):
        if s is None or s == "":
            raise ValidationError(f"instance at position {i} has no study_id")
        groups.setdefault(s, []).append(i)
    return groups


def aggregate_studies(
    study_ids: Sequence[str],
    logits=None,
    probs=None,
    labels=None,
    method: str = "logit_sum",
    weights=None,
    mean_logits: bool = False,
):
    """Aggregate every study; returns (study ids, (S, K) probs, study labels).

    Studies appear in order of first occurrence. With ``labels`` given,
    every instance of a study must carry the same label.
    """
    if method not in METHODS:
        raise ValueError(f"unknown aggregation {method!r}; expected one of {METHODS}")
    groups = group_by_study(study_ids)
    out_ids, out_probs, out_labels = [], [], []
    if method == "logit_sum" and logits is None:
        raise ValidationError("logit_sum aggregation needs logits")
    if method == "weighted_prob":
        if probs is None:
            probs = softmax(logits)
        if weights is None:
            weights = np.ones(len(study_ids))
        weights = np.asarray(weights, dtype=float)
    for sid, idx in groups.items():
        if method == "logit_sum":
            out_probs.append(aggregate_logits(np.asarray(logits)[idx], mean=mean_logits))
        else:
            out_probs.append(aggregate_weighted(np.asarray(probs)[idx], weights[idx]))
        out_ids.append(sid)
        if labels is not None:
            ys = np.unique(np.asarray(labels)[idx])
            if ys.size != 1:
                raise ValidationError(f"study {sid} has instances with different labels")
            out_labels.append(int(ys[0]))
    study_labels = np.array(out_labels, dtype=np.int64) if labels is not None else None
    return out_ids, np.array(out_probs).reshape(len(out_ids), -1), study_labels
