"""Pseudo-labels from prediction history, and two-round re-training.

Round 1 fits one-hot labels while recording the per-epoch training logits.
The pseudo-label of each instance is the mean of its per-epoch softmax
outputs. Round 2 restarts from freshly initialized parameters and fits the
pseudo-labels for the same number of epochs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .classifier import ModelParams, TrainConfig, init_model, softmax, train
from .data_model import Dataset, PredictionHistory, ValidationError, derive_seed, one_hot


@dataclass(frozen=True)
class PseudoLabelSet:
    ids: tuple[str, ...]
    targets: np.ndarray = field(repr=False)
    num_epochs: int = 0
    normalization: str = "mean"

    def __post_init__(self):
        arr = np.array(self.targets, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "targets", arr)

    def as_mapping(self) -> dict[str, np.ndarray]:
        return dict(zip(self.ids, self.targets))

    def __len__(self) -> int:
        return len(self.ids)


def form_pseudo_labels(history: PredictionHistory) -> PseudoLabelSet:
    """Average the per-epoch softmax outputs of every instance."""
    if len(history) == 0:
        raise ValidationError("prediction history is empty")
    probs = softmax(history.logits)
    # mean written as first row + mean deviation: exact when all epochs agree
    first = probs[:, :1, :]
    mean = first[:, 0, :] + (probs - first).mean(axis=1)
    return PseudoLabelSet(history.ids, mean, history.num_epochs)


def round_seed(seed: int, round_index: int) -> int:
    return derive_seed(seed, 7, round_index)


@dataclass(frozen=True)
class RT4UResult:
    model: ModelParams
    pseudo_labels: PseudoLabelSet
    history: PredictionHistory
    round1_model: ModelParams
    round2_history: Optional[PredictionHistory] = None


def rt4u_train(data: Dataset, cfg: TrainConfig, hidden_dim: int = 0) -> RT4UResult:
    """Two rounds of training; round 2 starts from scratch on pseudo-labels.

    Each round ``r`` uses ``round_seed(cfg.seed, r)`` for both initialization
    and batch shuffling, so the whole procedure is a function of ``cfg``.
    The round-1 model is the plain one-hot baseline and is returned as well.
    """
    present = set(np.unique(data.labels).tolist())
    absent = [k for k in range(data.num_classes) if k not in present]
    if absent:
        raise ValidationError(f"training split has no instances of class(es) {absent}")

    cfg1 = replace(cfg, seed=round_seed(cfg.seed, 1))
    model1 = init_model(data.num_features, hidden_dim, data.num_classes, cfg1.seed)
    model1, history = train(model1, data, one_hot(data.labels, data.num_classes), cfg1)

    pseudo = form_pseudo_labels(history)

    cfg2 = replace(cfg, seed=round_seed(cfg.seed, 2))
    model2 = init_model(data.num_features, hidden_dim, data.num_classes, cfg2.seed)
    model2, history2 = train(model2, data, pseudo, cfg2)
    return RT4UResult(model2, pseudo, history, model1, history2)
