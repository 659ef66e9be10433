"""End-to-end evaluation: temperature, conformal sets, metrics at both levels.

The functions here work purely from logits plus dataset metadata, so they
serve equally for the built-in trainer and for logits exported elsewhere.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .aggregate import aggregate_studies
from .classifier import TrainConfig, init_model, predict_logits, softmax, train
from .conformal import ConformalCalibration, calibrate, set_mask
from .data_model import Dataset, ValidationError, one_hot
from .metrics import (
    TrialReport,
    class_balanced_mean,
    balanced_accuracy,
    ordinality_fraction,
    run_trials,
)
from .postcalib import ReliabilityReport, expected_calibration_error, fit_temperature, nll
from .retrain import rt4u_train, round_seed
from .synthdata import QuadrantGenConfig, generate, split

log = logging.getLogger(__name__)

LEVELS = ("instance", "study")

# Desk-scale analogue of the quadrant benchmark: high-dimensional slices let
# a linear model memorize the non-informative ones, which is the failure
# mode that history pseudo-labels address.
CIFARQ_GEN = dict(
    n_studies=2000,
    slices_per_study=4,
    num_classes=10,
    num_features=1024,
    informative_fraction=0.25,
    class_separation=12.0,
    noise_sigma=1.0,
)
CIFARQ_TRAIN = dict(epochs=10, learning_rate=0.05, batch_size=32)
CIFARQ_FRACTIONS = (0.7, 0.1, 0.1, 0.1)
CIFARQ_ALPHA = 0.05


@dataclass(frozen=True)
class SplitLogits:
    """Logits of one split joined with the dataset columns they belong to."""

    ids: tuple[str, ...]
    logits: np.ndarray
    labels: np.ndarray
    study_ids: tuple[str, ...]
    informative: tuple[Optional[bool], ...]
    num_classes: int

    @classmethod
    def join(cls, data: Dataset, ids: Sequence[str], logits) -> "SplitLogits":
        """Align exported ``(ids, logits)`` with ``data``; every instance must be present."""
        logits = np.asarray(logits, dtype=float)
        pos = {i: n for n, i in enumerate(ids)}
        missing = [i for i in data.ids if i not in pos]
        if missing:
            raise ValidationError(f"no logits for {len(missing)} {data.split_tag} instances, e.g. {missing[0]}")
        if logits.ndim != 2 or logits.shape[1] != data.num_classes:
            raise ValidationError(f"logits have {logits.shape[-1]} columns, dataset has {data.num_classes} classes")
        order = [pos[i] for i in data.ids]
        return cls(data.ids, logits[order], np.asarray(data.labels), data.study_ids, data.informative, data.num_classes)

    @classmethod
    def from_model(cls, model, data: Dataset) -> "SplitLogits":
        return cls.join(data, data.ids, predict_logits(model, data.features))

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class View:
    """Probabilities and labels at one evaluation level."""

    ids: tuple[str, ...]
    probs: np.ndarray
    labels: np.ndarray
    informative: Optional[np.ndarray] = None


@dataclass
class LevelResult:
    level: str
    view: View
    calibration: ConformalCalibration
    mask: np.ndarray
    reliability: ReliabilityReport
    metrics: dict
    trials: Optional[TrialReport] = None


@dataclass
class EvalResult:
    temperature: float
    levels: dict[str, LevelResult] = field(default_factory=dict)

    def metrics(self) -> dict:
        out = {"temperature": self.temperature}
        out.update({name: lv.metrics for name, lv in self.levels.items()})
        return out


def resolve_temperature(spec: Union[str, float, None], val: Optional[SplitLogits]) -> float:
    if spec is None or spec == "none":
        return 1.0
    if spec == "fit":
        if val is None or len(val) == 0:
            raise ValidationError("temperature fitting needs a non-empty validation split")
        return fit_temperature(val.logits, val.labels).t
    t = float(spec)
    if not t > 0:
        raise ValueError(f"temperature must be > 0, got {spec}")
    return t


def instance_view(s: SplitLogits, t: float = 1.0) -> View:
    inf = None
    if s.informative and all(v is not None for v in s.informative):
        inf = np.array(s.informative, dtype=bool)
    return View(s.ids, softmax(s.logits / t), s.labels, inf)


def study_view(
    s: SplitLogits,
    t: float = 1.0,
    agg: str = "logit_sum",
    weights: Optional[Mapping[str, float]] = None,
    mean_logits: bool = False,
) -> View:
    method = "weighted_prob" if agg in ("weighted", "weighted_prob") else agg
    w = None
    if method == "weighted_prob" and weights is not None:
        missing = [i for i in s.ids if i not in weights]
        if missing:
            raise ValidationError(f"no weight for {len(missing)} instances, e.g. {missing[0]}")
        w = np.array([weights[i] for i in s.ids], dtype=float)
    sids, probs, labels = aggregate_studies(
        s.study_ids, logits=s.logits / t, labels=s.labels, method=method, weights=w, mean_logits=mean_logits
    )
    return View(tuple(sids), probs, labels)


def _concat(a: View, b: View) -> View:
    return View(a.ids + b.ids, np.vstack([a.probs, b.probs]), np.concatenate([a.labels, b.labels]))


def set_statistics(mask: np.ndarray, labels: np.ndarray, num_classes: int) -> dict:
    hits = mask[np.arange(labels.shape[0]), labels]
    sizes = mask.sum(axis=1)
    return {
        "bcov": class_balanced_mean(hits, labels, num_classes),
        "coverage": float(hits.mean()),
        "mean_set_size": float(sizes.mean()),
        "empty_set_fraction": float(np.mean(sizes == 0)),
        "ordinality_fraction": ordinality_fraction(mask),
    }


def evaluate_level(
    level: str,
    cal: View,
    test: View,
    num_classes: int,
    alpha: float,
    force_nonempty: bool = False,
    bins: int = 15,
    n_trials: int = 0,
    cal_fraction: float = 0.5,
    seed: int = 0,
    resample: str = "cal+test",
) -> LevelResult:
    if len(cal.labels) == 0:
        raise ValidationError(f"{level}-level calibration split is empty")
    if len(test.labels) == 0:
        raise ValidationError(f"{level}-level evaluation split is empty")
    calib = calibrate(cal.probs, cal.labels, alpha)
    mask = set_mask(test.probs, calib)
    rel = expected_calibration_error(test.probs, test.labels, bins)
    m = {
        "n_cal": calib.n_cal,
        "n_eval": int(test.labels.shape[0]),
        "q_hat": "inf" if math.isinf(calib.q_hat) else calib.q_hat,
        "bacc": balanced_accuracy(test.probs.argmax(axis=1), test.labels, num_classes),
        "ece": rel.ece,
    }
    m.update(set_statistics(mask, test.labels, num_classes))
    if test.informative is not None and test.informative.any() and (~test.informative).any():
        sizes = mask.sum(axis=1)
        m["mean_set_size_informative"] = float(sizes[test.informative].mean())
        m["mean_set_size_noninformative"] = float(sizes[~test.informative].mean())
    if force_nonempty:
        forced = set_mask(test.probs, calib, force_nonempty=True)
        m["force_nonempty"] = set_statistics(forced, test.labels, num_classes)
        mask = forced

    trials = None
    if n_trials > 0:
        if resample == "cal":
            trials = run_trials(cal.probs, cal.labels, alpha, n_trials, cal_fraction, seed, "cal",
                                test.probs, test.labels, force_nonempty)
        else:
            pool = _concat(cal, test)
            trials = run_trials(pool.probs, pool.labels, alpha, n_trials, cal_fraction, seed, "cal+test",
                                force_nonempty=force_nonempty)
        m["trials"] = trials.summary()
    return LevelResult(level, test, calib, mask, rel, m, trials)


def evaluate_run(
    val: Optional[SplitLogits],
    cal: SplitLogits,
    test: SplitLogits,
    alpha: float,
    temperature: Union[str, float, None] = "none",
    levels: Sequence[str] = LEVELS,
    agg: str = "logit_sum",
    weights: Optional[Mapping[str, float]] = None,
    mean_logits: bool = False,
    force_nonempty: bool = False,
    bins: int = 15,
    n_trials: int = 0,
    cal_fraction: float = 0.5,
    seed: int = 0,
    resample: str = "cal+test",
) -> EvalResult:
    """Calibrate on ``cal`` and score ``test`` at each requested level.

    The study level uses its own threshold, fitted on study-aggregated
    calibration probabilities.
    """
    t = resolve_temperature(temperature, val)
    result = EvalResult(t)
    for level in levels:
        if level == "instance":
            cv, tv = instance_view(cal, t), instance_view(test, t)
        elif level == "study":
            cv = study_view(cal, t, agg, weights, mean_logits)
            tv = study_view(test, t, agg, weights, mean_logits)
        else:
            raise ValueError(f"unknown level {level!r}")
        result.levels[level] = evaluate_level(
            level, cv, tv, test.num_classes, alpha, force_nonempty, bins,
            n_trials, cal_fraction, seed, resample,
        )
    if val is not None and len(val):
        result_nll = {"nll_t1": nll(val.logits, val.labels, 1.0), "nll_fit": nll(val.logits, val.labels, t)}
        for lv in result.levels.values():
            lv.metrics.setdefault("val", result_nll)
    return result


def train_baseline(splits: Mapping[str, Dataset], cfg: TrainConfig, hidden_dim: int = 0):
    """One round of training on one-hot labels (the plain baseline)."""
    tr = splits["train"]
    cfg1 = replace(cfg, seed=round_seed(cfg.seed, 1))
    model = init_model(tr.num_features, hidden_dim, tr.num_classes, cfg1.seed)
    return train(model, tr, one_hot(tr.labels, tr.num_classes), cfg1)


def compare_methods(
    splits: Mapping[str, Dataset],
    cfg: TrainConfig,
    alpha: float,
    hidden_dim: int = 0,
    include_mae: bool = False,
    **eval_kwargs,
) -> dict[str, EvalResult]:
    """Baseline vs re-trained model, each with and without temperature.

    The baseline is the round-1 model of the re-training run, so both share
    initialization and shuffling streams.
    """
    res = rt4u_train(splits["train"], cfg, hidden_dim)
    out: dict[str, EvalResult] = {}
    models = {"CE": res.round1_model, "CE+RT4U": res.model}
    if include_mae:
        mae_model, _ = train_baseline(splits, replace(cfg, loss="mae"), hidden_dim)
        models = {"MAE": mae_model, **models}
    for name, model in models.items():
        val = SplitLogits.from_model(model, splits["val"]) if len(splits["val"]) else None
        cal = SplitLogits.from_model(model, splits["cal"])
        test = SplitLogits.from_model(model, splits["test"])
        out[name] = evaluate_run(val, cal, test, alpha, "none", **eval_kwargs)
        if name != "MAE":
            out[name + "+Temp"] = evaluate_run(val, cal, test, alpha, "fit", **eval_kwargs)
    return out


def cifarq_splits(seed: int, **overrides) -> dict[str, Dataset]:
    gen = QuadrantGenConfig(**{**CIFARQ_GEN, **overrides, "seed": seed})
    return split(generate(gen), CIFARQ_FRACTIONS, seed)


def cifarq_run(seed: int, n_trials: int = 0, include_mae: bool = False, **gen_overrides) -> dict[str, EvalResult]:
    """Run the quadrant benchmark analogue with preset settings for one seed."""
    splits = cifarq_splits(seed, **gen_overrides)
    cfg = TrainConfig(seed=seed, **CIFARQ_TRAIN)
    return compare_methods(splits, cfg, CIFARQ_ALPHA, include_mae=include_mae, n_trials=n_trials, seed=seed)
