"""Synthetic multi-slice studies with informative and non-informative slices.

Each study has one label and ``slices_per_study`` feature vectors. A slice
is informative with probability ``informative_fraction``; informative
slices are drawn around their class mean, the rest around the centroid of
all class means, so they carry no information about the label.

Class means are ``(class_separation / sqrt 2) * e_k`` for the first ``K``
coordinate axes, giving pairwise distance exactly ``class_separation``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .data_model import SPLIT_TAGS, Dataset, ValidationError, make_rng


@dataclass(frozen=True)
class QuadrantGenConfig:
    n_studies: int = 1000
    slices_per_study: int = 4
    num_classes: int = 10
    num_features: int = 32
    informative_fraction: float = 0.25
    class_separation: float = 4.0
    noise_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_studies < 1:
            raise ValueError("n_studies must be >= 1")
        if self.slices_per_study < 1:
            raise ValueError("slices_per_study must be >= 1")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.num_features < self.num_classes:
            raise ValueError("num_features must be >= num_classes (one axis per class mean)")
        if not 0.0 <= self.informative_fraction <= 1.0:
            raise ValueError("informative_fraction must lie in [0, 1]")
        if not self.class_separation > 0:
            raise ValueError("class_separation must be > 0")
        if not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


def class_means(cfg: QuadrantGenConfig) -> np.ndarray:
    means = np.zeros((cfg.num_classes, cfg.num_features))
    means[np.arange(cfg.num_classes), np.arange(cfg.num_classes)] = cfg.class_separation / math.sqrt(2.0)
    return means


def study_name(i: int) -> str:
    return f"s{i:06d}"


def generate(cfg: QuadrantGenConfig) -> Dataset:
    rng = make_rng(cfg.seed, 21)
    n, m = cfg.n_studies, cfg.slices_per_study
    labels = rng.integers(0, cfg.num_classes, size=n)
    informative = rng.random((n, m)) < cfg.informative_fraction
    noise = rng.standard_normal((n, m, cfg.num_features)) * cfg.noise_sigma

    means = class_means(cfg)
    centroid = means.mean(axis=0)
    centers = np.where(informative[..., None], means[labels][:, None, :], centroid)
    feats = (centers + noise).reshape(n * m, cfg.num_features)

    ids = [f"{study_name(i)}_q{j}" for i in range(n) for j in range(m)]
    studies = [study_name(i) for i in range(n) for _ in range(m)]
    return Dataset.from_arrays(
        ids,
        feats,
        np.repeat(labels, m),
        studies,
        cfg.num_classes,
        informative=informative.ravel().tolist(),
        split_tag="train",
    )


def largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    """Integer counts proportional to ``fractions`` that sum to ``total``.

    Leftover units go to the largest fractional remainders; ties go to the
    earlier entry.
    """
    raw = [f * total for f in fractions]
    counts = [math.floor(r) for r in raw]
    left = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:left]:
        counts[i] += 1
    return counts


def split(dataset: Dataset, fractions: Sequence[float], seed: int) -> dict[str, Dataset]:
    """Split at study granularity into train/val/cal/test.

    Returns a dict keyed by split tag. Splits with a zero fraction may be
    empty; a split with positive fraction that would get no study is an
    error.
    """
    fractions = [float(f) for f in fractions]
    if len(fractions) != len(SPLIT_TAGS):
        raise ValueError(f"expected {len(SPLIT_TAGS)} fractions (train, val, cal, test)")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must be nonnegative and sum to 1, got {fractions}")

    studies: dict[str, list[int]] = {}
    for i, s in enumerate(dataset.study_ids):
        studies.setdefault(s, []).append(i)
    names = list(studies)
    counts = largest_remainder(len(names), fractions)
    for tag, f, c in zip(SPLIT_TAGS, fractions, counts):
        if f > 0 and c == 0:
            raise ValidationError(f"split '{tag}' receives zero studies")

    perm = make_rng(seed, 31).permutation(len(names))
    out = {}
    start = 0
    for tag, c in zip(SPLIT_TAGS, counts):
        chosen = sorted(perm[start:start + c].tolist())
        start += c
        idx = [i for j in chosen for i in studies[names[j]]]
        out[tag] = dataset.subset(idx, split_tag=tag)
    return out
