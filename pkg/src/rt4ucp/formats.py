"""Readers and writers for the on-disk CSV / JSON / JSONL formats.

Floats are written with ``repr`` (shortest string that round-trips), files
are UTF-8 with LF endings. CSV files may end with ``#`` comment lines
carrying tool version and seed; readers skip them and
:func:`read_trailer` returns them.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .classifier import ModelParams
from .conformal import ConformalCalibration
from .data_model import Dataset, Instance, PredictionHistory, ValidationError
from .metrics import TrialReport
from .postcalib import ReliabilityReport
from .retrain import PseudoLabelSet

TOOL = "rt4ucp"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def trailer(seed: Optional[int] = None, **extra) -> list[str]:
    parts = [f"tool={TOOL}", f"version={__version__}"]
    if seed is not None:
        parts.append(f"seed={seed}")
    parts += [f"{k}={v}" for k, v in extra.items()]
    return ["# " + " ".join(parts)]


def _write_lines(path, lines: Iterable[str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in fh]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValidationError(f"{path} has no header")
    rows = [ln.split(",") for ln in lines]
    return rows[0], rows[1:]


def read_trailer(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [ln.rstrip("\n") for ln in fh if ln.startswith("#")]


def write_json(path, obj, seed: Optional[int] = None) -> None:
    obj = dict(obj)
    obj.setdefault("tool", TOOL)
    obj.setdefault("version", __version__)
    if seed is not None:
        obj.setdefault("seed", seed)
    _write_lines(path, [json.dumps(obj, indent=2, sort_keys=True, allow_nan=True)])


def read_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: {exc}") from None


# -- dataset -----------------------------------------------------------------

def write_dataset_csv(path, ds: Dataset, comments: Sequence[str] = ()) -> None:
    dim = ds.num_features if len(ds) else 0
    header = ["id", "study_id", "label", "informative"] + [f"f{j}" for j in range(dim)]
    lines = [",".join(header)]
    for inst in ds:
        inf = "" if inst.informative is None else ("1" if inst.informative else "0")
        lines.append(",".join([inst.id, inst.study_id, str(inst.label), inf] + [fmt(v) for v in inst.features]))
    _write_lines(path, lines + list(comments))


def read_dataset_csv(path, num_classes: int, split_tag: str = "train", **meta) -> Dataset:
    header, rows = _read_rows(path)
    if header[:4] != ["id", "study_id", "label", "informative"]:
        raise ValidationError(f"{path}: header must start with id,study_id,label,informative")
    dim = len(header) - 4
    insts = []
    for lineno, r in enumerate(rows, start=2):
        if len(r) != 4 + dim:
            raise ValidationError(f"{path}:{lineno}: expected {4 + dim} fields, got {len(r)}")
        try:
            label = int(r[2])
            feats = tuple(float(v) for v in r[4:])
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        inf = {"": None, "1": True, "0": False}.get(r[3])
        if r[3] not in ("", "1", "0"):
            raise ValidationError(f"{path}:{lineno}: informative must be 1, 0 or empty")
        insts.append(Instance(r[0], feats, label, r[1], inf))
    return Dataset(tuple(insts), num_classes, split_tag, **meta)


# -- logits --------------------------------------------------------------------

def write_logits_csv(path, blocks: Sequence[tuple[str, Sequence[str], np.ndarray]], comments: Sequence[str] = ()) -> None:
    """``blocks`` is a list of ``(split, ids, (N, K) logits)``."""
    k = next((np.asarray(z).shape[1] for _, _, z in blocks if len(z)), 0)
    lines = [",".join(["id", "split"] + [f"z{j}" for j in range(k)])]
    for split, ids, z in blocks:
        for i, row in zip(ids, np.asarray(z)):
            lines.append(",".join([i, split] + [fmt(v) for v in row]))
    _write_lines(path, lines + list(comments))


def read_logits_csv(path) -> dict[str, tuple[list[str], np.ndarray]]:
    """Return ``{split: (ids, logits)}`` preserving file order."""
    header, rows = _read_rows(path)
    if header[:2] != ["id", "split"]:
        raise ValidationError(f"{path}: header must start with id,split")
    k = len(header) - 2
    out: dict[str, tuple[list[str], list]] = {}
    for lineno, r in enumerate(rows, start=2):
        if len(r) != 2 + k:
            raise ValidationError(f"{path}:{lineno}: expected {2 + k} fields")
        ids, vals = out.setdefault(r[1], ([], []))
        ids.append(r[0])
        vals.append([float(v) for v in r[2:]])
    return {s: (ids, np.array(vals, dtype=float).reshape(len(ids), k)) for s, (ids, vals) in out.items()}


# -- history / pseudo-labels ---------------------------------------------------

def history_meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_history_jsonl(path, history: PredictionHistory, seed: Optional[int] = None) -> None:
    lines = [
        json.dumps({"id": i, "epochs": [[float(v) for v in row] for row in h]})
        for i, h in zip(history.ids, history.logits)
    ]
    _write_lines(path, lines)
    write_json(history_meta_path(path), {"epochs": history.num_epochs, "num_classes": history.num_classes}, seed)


def read_history_jsonl(path) -> PredictionHistory:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    ids, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            if not isinstance(rec, dict) or "id" not in rec or "epochs" not in rec:
                raise ValidationError(f"{path}:{lineno}: expected an object with 'id' and 'epochs'")
            ids.append(str(rec["id"]))
            rows.append(rec["epochs"])
    shapes = {(len(r), len(r[0]) if r else 0) for r in rows}
    if len(shapes) > 1:
        raise ValidationError(f"{path}: inconsistent epoch count or class count across instances")
    if any(len(set(len(e) for e in r)) > 1 for r in rows):
        raise ValidationError(f"{path}: inconsistent class count within an instance")
    return PredictionHistory(tuple(ids), np.array(rows, dtype=float))


def write_pseudo_labels_csv(path, pl: PseudoLabelSet, comments: Sequence[str] = ()) -> None:
    k = pl.targets.shape[1] if len(pl) else 0
    lines = [",".join(["id"] + [f"p{j}" for j in range(k)])]
    lines += [",".join([i] + [fmt(v) for v in row]) for i, row in zip(pl.ids, pl.targets)]
    _write_lines(path, lines + list(comments))


def read_pseudo_labels_csv(path) -> PseudoLabelSet:
    header, rows = _read_rows(path)
    if header[0] != "id":
        raise ValidationError(f"{path}: header must start with id")
    k = len(header) - 1
    ids = [r[0] for r in rows]
    vals = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(len(ids), k)
    return PseudoLabelSet(tuple(ids), vals)


# -- model -------------------------------------------------------------------

def model_to_json(model: ModelParams) -> dict:
    return {
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "num_classes": model.num_classes,
        "activation": model.activation,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }


def model_from_json(obj: dict) -> ModelParams:
    return ModelParams(
        int(obj["input_dim"]),
        int(obj["hidden_dim"]),
        int(obj["num_classes"]),
        tuple(np.array(w, dtype=float).reshape(len(w), -1) for w in obj["weights"]),
        tuple(np.array(b, dtype=float) for b in obj["biases"]),
        obj.get("activation", "tanh"),
    )


# -- conformal / metrics reports ---------------------------------------------

def write_calibration_json(path, cal: ConformalCalibration, seed: Optional[int] = None, **extra) -> None:
    write_json(path, {**cal.to_json(), **extra}, seed)


def read_calibration_json(path) -> ConformalCalibration:
    return ConformalCalibration.from_json(read_json(path))


def write_sets_csv(path, ids, labels, mask: np.ndarray, comments: Sequence[str] = ()) -> None:
    lines = ["id,label,size,members"]
    for i, y, row in zip(ids, labels, mask):
        members = ";".join(str(k) for k in np.flatnonzero(row))
        lines.append(f"{i},{int(y)},{int(row.sum())},{members}")
    _write_lines(path, lines + list(comments))


def write_trials_csv(path, report: TrialReport, comments: Sequence[str] = ()) -> None:
    lines = ["trial,bcov,mean_set_size"]
    lines += [f"{t},{fmt(b)},{fmt(s)}" for t, (b, s) in enumerate(zip(report.bcov, report.mean_set_size))]
    _write_lines(path, lines + list(comments))


def read_trials_csv(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = _read_rows(path)
    if header != ["trial", "bcov", "mean_set_size"]:
        raise ValidationError(f"{path}: unexpected header {header}")
    arr = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(len(rows), 2)
    return arr[:, 0], arr[:, 1]


def write_reliability_csv(path, rep: ReliabilityReport, comments: Sequence[str] = ()) -> None:
    lines = ["bin_lo,bin_hi,count,mean_conf,accuracy"]
    for lo, hi, c, mc, acc in zip(rep.bin_edges[:-1], rep.bin_edges[1:], rep.counts, rep.mean_conf, rep.accuracy):
        lines.append(f"{fmt(lo)},{fmt(hi)},{int(c)},{fmt(mc)},{fmt(acc)}")
    lines.append(f"# ece={fmt(rep.ece)}")
    _write_lines(path, lines + list(comments))


def read_reliability_csv(path) -> ReliabilityReport:
    header, rows = _read_rows(path)
    arr = np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(len(rows), 5)
    ece = float("nan")
    for line in read_trailer(path):
        if line.startswith("# ece="):
            ece = float(line.split("=", 1)[1])
    edges = np.append(arr[:, 0], arr[-1, 1]) if len(arr) else np.array([0.0, 1.0])
    return ReliabilityReport(edges, arr[:, 2].astype(np.int64), arr[:, 3], arr[:, 4], ece)


def read_weights_csv(path) -> dict[str, float]:
    header, rows = _read_rows(path)
    if header != ["id", "weight"]:
        raise ValidationError(f"{path}: weights file header must be id,weight")
    return {r[0]: float(r[1]) for r in rows}
