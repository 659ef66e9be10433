"""Report figures: reliability diagrams, confidence histograms, set sizes."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .postcalib import ReliabilityReport  # noqa: E402

# no timestamps or version strings, so reruns produce identical PNGs
_PNG_META = {"Software": None}


def _save(fig, path, description: str = "") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = dict(_PNG_META)
    if description:
        meta["Description"] = description
    fig.savefig(path, dpi=120, metadata=meta)
    plt.close(fig)
    return path


def calibration_figure(
    reports: Mapping[str, ReliabilityReport],
    confidences: Mapping[str, np.ndarray],
    path,
    title: str = "",
    description: str = "",
) -> Path:
    """Reliability curves (left) and top-class confidence histograms (right)."""
    fig, (ax_rel, ax_hist) = plt.subplots(1, 2, figsize=(10, 4))
    ax_rel.plot([0, 1], [0, 1], color="0.6", linestyle="--", linewidth=1, label="ideal")
    for name, rep in reports.items():
        keep = rep.counts > 0
        ax_rel.plot(rep.mean_conf[keep], rep.accuracy[keep], marker="o", markersize=3,
                    label=f"{name} (ECE {rep.ece:.3f})")
    ax_rel.set_xlim(0, 1)
    ax_rel.set_ylim(0, 1)
    ax_rel.set_xlabel("confidence")
    ax_rel.set_ylabel("accuracy")
    ax_rel.legend(fontsize="small", loc="upper left")

    edges = np.linspace(0, 1, 21)
    for name, conf in confidences.items():
        ax_hist.hist(conf, bins=edges, histtype="step", linewidth=1.5, label=name)
    ax_hist.set_xlabel("confidence of predicted class")
    ax_hist.set_ylabel("count")
    ax_hist.legend(fontsize="small")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path, description)


def set_size_figure(
    sizes: Mapping[str, np.ndarray],
    num_classes: int,
    path,
    informative: Optional[np.ndarray] = None,
    title: str = "",
    description: str = "",
) -> Path:
    """Histogram of prediction-set sizes, split by informativeness when known."""
    bins = np.arange(num_classes + 2) - 0.5
    if informative is not None and informative.any() and (~informative).any():
        fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
        groups = [("informative", informative), ("non-informative", ~informative)]
    else:
        fig, ax = plt.subplots(figsize=(5, 4))
        axes = [ax]
        groups = [("all", None)]
    for ax, (label, sel) in zip(axes, groups):
        for name, s in sizes.items():
            s = np.asarray(s)
            ax.hist(s if sel is None else s[sel], bins=bins, histtype="step", linewidth=1.5, label=name)
        ax.set_title(label)
        ax.set_xlabel("|C(x)|")
        ax.set_xticks(range(num_classes + 1))
    axes[0].set_ylabel("count")
    axes[0].legend(fontsize="small")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path, description)


def trials_figure(
    bcov: np.ndarray,
    sizes: np.ndarray,
    alpha: float,
    path,
    upper: Optional[float] = None,
    description: str = "",
) -> Path:
    fig, (ax_c, ax_s) = plt.subplots(1, 2, figsize=(10, 3.5))
    ax_c.hist(bcov, bins=20, color="tab:blue", alpha=0.7)
    ax_c.axvline(1 - alpha, color="k", linestyle="--", linewidth=1, label=r"$1-\alpha$")
    if upper is not None:
        ax_c.axvline(upper, color="0.5", linestyle=":", linewidth=1, label="upper bound")
    ax_c.axvline(np.median(bcov), color="tab:red", linewidth=1, label="median")
    ax_c.set_xlabel("balanced coverage per trial")
    ax_c.legend(fontsize="small")
    ax_s.hist(sizes, bins=20, color="tab:green", alpha=0.7)
    ax_s.axvline(np.median(sizes), color="tab:red", linewidth=1)
    ax_s.set_xlabel("mean set size per trial")
    fig.tight_layout()
    return _save(fig, path, description)
