"""Prediction-history pseudo-label re-training with conformal prediction sets."""

__version__ = "0.1.0"

from .data_model import Dataset, Instance, PredictionHistory, validate_dataset  # noqa: E402
from .classifier import ModelParams, TrainConfig, init_model, predict_logits, softmax, train  # noqa: E402
from .retrain import PseudoLabelSet, form_pseudo_labels, rt4u_train  # noqa: E402
from .conformal import (  # noqa: E402
    ConformalCalibration,
    PredictionSet,
    calibrate_quantile,
    conformal_score,
    coverage_bounds,
    predict_set,
)
from .postcalib import Temperature, apply_temperature, expected_calibration_error, fit_temperature  # noqa: E402
from .aggregate import aggregate_logits, aggregate_weighted, group_by_study  # noqa: E402
from .metrics import (  # noqa: E402
    TrialReport,
    balanced_accuracy,
    balanced_coverage,
    mean_set_size,
    ordinality_fraction,
    run_trials,
)
from .synthdata import QuadrantGenConfig, generate, split  # noqa: E402

__all__ = [
    "Dataset", "Instance", "PredictionHistory", "validate_dataset",
    "ModelParams", "TrainConfig", "init_model", "predict_logits", "softmax", "train",
    "PseudoLabelSet", "form_pseudo_labels", "rt4u_train",
    "ConformalCalibration", "PredictionSet", "calibrate_quantile", "conformal_score",
    "coverage_bounds", "predict_set",
    "Temperature", "apply_temperature", "expected_calibration_error", "fit_temperature",
    "aggregate_logits", "aggregate_weighted", "group_by_study",
    "TrialReport", "balanced_accuracy", "balanced_coverage", "mean_set_size",
    "ordinality_fraction", "run_trials",
    "QuadrantGenConfig", "generate", "split",
]
