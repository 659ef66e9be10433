"""Balanced accuracy/coverage, set-size statistics and the random-trial protocol."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .conformal import PredictionSet, calibrate, set_mask
from .data_model import ValidationError, make_rng

RESAMPLE_MODES = ("cal+test", "cal")


def as_mask(sets, num_classes: Optional[int] = None) -> np.ndarray:
    """Turn a list of PredictionSet (or a boolean matrix) into an (N, K) mask."""
    if isinstance(sets, np.ndarray) and sets.dtype == bool:
        return np.atleast_2d(sets)
    sets = list(sets)
    if num_classes is None:
        num_classes = 1 + max((max(s.members) for s in sets if len(s.members)), default=0)
    mask = np.zeros((len(sets), num_classes), dtype=bool)
    for i, s in enumerate(sets):
        members = s.members if isinstance(s, PredictionSet) else tuple(s)
        if members:
            mask[i, list(members)] = True
    return mask


def class_balanced_mean(hits: np.ndarray, truth: np.ndarray, num_classes: int) -> float:
    present = [k for k in range(num_classes) if np.any(truth == k)]
    return float(np.mean([hits[truth == k].mean() for k in present]))


def balanced_accuracy(predicted, truth, num_classes: int) -> float:
    """Mean per-class recall over the classes present in ``truth``."""
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if truth.size == 0:
        raise ValidationError("balanced accuracy of an empty set")
    if predicted.shape != truth.shape:
        raise ValidationError("predicted and truth differ in length")
    return class_balanced_mean(predicted == truth, truth, num_classes)


def covered(sets, truth, num_classes: Optional[int] = None) -> np.ndarray:
    truth = np.asarray(truth, dtype=np.int64)
    mask = as_mask(sets, num_classes)
    if mask.shape[0] != truth.shape[0]:
        raise ValidationError("sets and truth differ in length")
    return mask[np.arange(truth.shape[0]), truth]


def balanced_coverage(sets, truth, num_classes: int) -> float:
    truth = np.asarray(truth, dtype=np.int64)
    if truth.size == 0:
        raise ValidationError("balanced coverage of an empty set")
    return class_balanced_mean(covered(sets, truth, num_classes), truth, num_classes)


def coverage(sets, truth, num_classes: Optional[int] = None) -> float:
    """Plain (class-unbalanced) fraction of sets containing the truth."""
    truth = np.asarray(truth, dtype=np.int64)
    if truth.size == 0:
        raise ValidationError("coverage of an empty set")
    return float(covered(sets, truth, num_classes).mean())


def set_sizes(sets) -> np.ndarray:
    if isinstance(sets, np.ndarray) and sets.dtype == bool:
        return np.atleast_2d(sets).sum(axis=1)
    return np.array([len(s.members) if isinstance(s, PredictionSet) else len(s) for s in sets])


def mean_set_size(sets) -> float:
    sizes = set_sizes(sets)
    if sizes.size == 0:
        raise ValidationError("mean set size of an empty list")
    return float(sizes.mean())


def is_ordinal(members: Sequence[int]) -> bool:
    m = sorted(members)
    return len(m) <= 1 or m[-1] - m[0] == len(m) - 1


def ordinality_fraction(sets) -> float:
    """Fraction of sets forming a contiguous run of class indices."""
    if isinstance(sets, np.ndarray) and sets.dtype == bool:
        rows = [np.flatnonzero(r) for r in np.atleast_2d(sets)]
    else:
        rows = [s.members if isinstance(s, PredictionSet) else tuple(s) for s in sets]
    if not rows:
        return 1.0
    return float(np.mean([is_ordinal(r) for r in rows]))


@dataclass(frozen=True)
class TrialReport:
    bcov: np.ndarray = field(repr=False)
    mean_set_size: np.ndarray = field(repr=False)
    coverage: np.ndarray = field(repr=False)
    alpha: float
    n_trials: int
    seed: int
    n_cal: int
    n_eval: int
    resample: str = "cal+test"

    @property
    def median_bcov(self) -> float:
        return float(np.median(self.bcov))

    @property
    def median_set_size(self) -> float:
        return float(np.median(self.mean_set_size))

    @property
    def median_coverage(self) -> float:
        return float(np.median(self.coverage))

    def summary(self) -> dict:
        return {
            "median_bcov": self.median_bcov,
            "median_mean_set_size": self.median_set_size,
            "median_coverage": self.median_coverage,
            "alpha": self.alpha,
            "n_trials": self.n_trials,
            "seed": self.seed,
            "n_cal": self.n_cal,
            "n_eval": self.n_eval,
            "resample": self.resample,
        }


def run_trials(
    probs,
    labels,
    alpha: float,
    n_trials: int = 100,
    cal_fraction: float = 0.5,
    seed: int = 0,
    resample: str = "cal+test",
    test_probs=None,
    test_labels=None,
    force_nonempty: bool = False,
) -> TrialReport:
    """Repeat calibrate-then-evaluate over random splits of a held-out pool.

    With ``resample="cal+test"`` (default) the pool ``probs``/``labels`` is
    reshuffled each trial and its first ``round(cal_fraction * n)`` entries
    calibrate while the rest are evaluated. With ``resample="cal"`` each
    trial calibrates on a random ``cal_fraction`` subset of the pool and
    always evaluates on the fixed ``test_probs``/``test_labels``.

    Trial ``i`` draws from the RNG stream ``(seed, i)`` only, so the report
    does not depend on evaluation order.
    """
    if not 0.0 < cal_fraction < 1.0:
        raise ValueError(f"cal_fraction must lie in (0, 1), got {cal_fraction}")
    if resample not in RESAMPLE_MODES:
        raise ValueError(f"resample must be one of {RESAMPLE_MODES}")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    labels = np.asarray(labels, dtype=np.int64)
    n, k = probs.shape
    n_cal = int(round(cal_fraction * n))
    if resample == "cal":
        if test_probs is None or test_labels is None:
            raise ValidationError("resample='cal' needs a fixed test set")
        test_probs = np.atleast_2d(np.asarray(test_probs, dtype=float))
        test_labels = np.asarray(test_labels, dtype=np.int64)
        n_eval = test_labels.shape[0]
    else:
        n_eval = n - n_cal
    if n_cal < 1 or n_eval < 1:
        raise ValidationError(f"pool of {n} instances leaves an empty calibration or evaluation part")

    bcov = np.empty(n_trials)
    size = np.empty(n_trials)
    cov = np.empty(n_trials)
    for t in range(n_trials):
        perm = make_rng(seed, 11, t).permutation(n)
        cal_idx = perm[:n_cal]
        if resample == "cal":
            ev_p, ev_y = test_probs, test_labels
        else:
            ev_idx = perm[n_cal:]
            ev_p, ev_y = probs[ev_idx], labels[ev_idx]
        cal = calibrate(probs[cal_idx], labels[cal_idx], alpha)
        mask = set_mask(ev_p, cal, force_nonempty)
        hits = mask[np.arange(ev_y.shape[0]), ev_y]
        bcov[t] = class_balanced_mean(hits, ev_y, k)
        cov[t] = hits.mean()
        size[t] = mask.sum(axis=1).mean()
    return TrialReport(bcov, size, cov, float(alpha), n_trials, int(seed), n_cal, n_eval, resample)
