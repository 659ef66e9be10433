"""Shared domain types, dataset validation and the seeded RNG contract.

Every randomized operation in the package draws from a generator built by
:func:`make_rng`, which uses numpy's ``SeedSequence`` + ``PCG64``. Child
streams are derived from a root seed plus a tuple of integer keys, so the
same (seed, keys) pair gives the same stream on any platform running the
same numpy bit generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

RNG_ALGORITHM = "numpy.SeedSequence+PCG64"
SPLIT_TAGS = ("train", "val", "cal", "test")
PROB_ATOL = 1e-9


class ValidationError(ValueError):
    """Input data breaks a domain invariant."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values."""


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return a generator for the child stream ``keys`` of root ``seed``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministically derive a new 64-bit seed from ``seed`` and ``keys``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def check_probability_vector(p, atol: float = PROB_ATOL) -> np.ndarray:
    """Validate one probability vector (or a stack of them along the last axis)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise ValidationError("probability vector must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("probability vector contains non-finite entries")
    if np.any(arr < 0) or np.any(arr > 1 + atol):
        raise ValidationError("probability entries must lie in [0, 1]")
    if not np.allclose(arr.sum(axis=-1), 1.0, rtol=0.0, atol=atol):
        raise ValidationError("probability vector must sum to 1")
    return arr


def check_logits(z) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("logits must be finite (no NaN/Inf)")
    return arr


@dataclass(frozen=True)
class Instance:
    id: str
    features: tuple[float, ...]
    label: int
    study_id: str
    informative: Optional[bool] = None


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of instances sharing ``num_classes``.

    Column views (``features``, ``labels`` ...) are built lazily and are
    read-only numpy arrays. ``class_order`` is optional metadata naming
    the classes in their (possibly ordinal) order.
    """

    instances: tuple[Instance, ...]
    num_classes: int
    split_tag: str = "train"
    class_order: Optional[tuple[str, ...]] = None
    ordinal: bool = False

    @classmethod
    def from_arrays(
        cls,
        ids: Sequence[str],
        features,
        labels: Sequence[int],
        study_ids: Sequence[str],
        num_classes: int,
        informative: Optional[Sequence[Optional[bool]]] = None,
        split_tag: str = "train",
        **meta,
    ) -> "Dataset":
        feats = np.asarray(features, dtype=float)
        if feats.ndim != 2 or feats.shape[0] != len(ids):
            feats = feats.reshape(len(ids), -1)
        if informative is None:
            informative = [None] * len(ids)
        insts = tuple(
            Instance(
                id=str(i),
                features=tuple(float(v) for v in row),
                label=int(y),
                study_id=str(s),
                informative=None if inf is None else bool(inf),
            )
            for i, row, y, s, inf in zip(ids, feats, labels, study_ids, informative)
        )
        return cls(insts, int(num_classes), split_tag, **meta)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(inst.id for inst in self.instances)

    @cached_property
    def study_ids(self) -> tuple[str, ...]:
        return tuple(inst.study_id for inst in self.instances)

    @cached_property
    def labels(self) -> np.ndarray:
        out = np.array([inst.label for inst in self.instances], dtype=np.int64)
        out.flags.writeable = False
        return out

    @cached_property
    def features(self) -> np.ndarray:
        dims = {len(inst.features) for inst in self.instances}
        if len(dims) > 1:
            raise ValidationError("feature length differs across instances")
        dim = dims.pop() if dims else 0
        out = np.array([inst.features for inst in self.instances], dtype=float).reshape(len(self), dim)
        out.flags.writeable = False
        return out

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @cached_property
    def informative(self) -> tuple[Optional[bool], ...]:
        return tuple(inst.informative for inst in self.instances)

    def subset(self, indices: Iterable[int], split_tag: Optional[str] = None) -> "Dataset":
        picked = tuple(self.instances[i] for i in indices)
        return Dataset(
            picked,
            self.num_classes,
            split_tag or self.split_tag,
            self.class_order,
            self.ordinal,
        )


def one_hot(labels, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def validate_dataset(d: Dataset) -> list[str]:
    """Return one human-readable entry per invariant violation (empty if clean)."""
    problems: list[str] = []
    if d.num_classes < 2:
        problems.append(f"num_classes must be >= 2: {d.num_classes}")
    if d.split_tag not in SPLIT_TAGS:
        problems.append(f"unknown split tag: {d.split_tag}")
    if d.class_order is not None and len(d.class_order) != d.num_classes:
        problems.append("class_order length differs from num_classes")

    seen: set[str] = set()
    reported: set[str] = set()
    dim = len(d.instances[0].features) if d.instances else 0
    for inst in d.instances:
        if inst.id in seen and inst.id not in reported:
            problems.append(f"duplicate id: {inst.id}")
            reported.add(inst.id)
        seen.add(inst.id)
        if not 0 <= inst.label < d.num_classes:
            problems.append(f"label out of range: {inst.id}")
        if len(inst.features) != dim:
            problems.append(f"feature length mismatch: {inst.id}")
        elif not all(np.isfinite(inst.features)):
            problems.append(f"non-finite feature: {inst.id}")
        if inst.study_id is None or inst.study_id == "":
            problems.append(f"missing study_id: {inst.id}")
    return problems


def require_valid(d: Dataset) -> Dataset:
    problems = validate_dataset(d)
    if problems:
        shown = "; ".join(problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise ValidationError(f"invalid {d.split_tag} dataset: {shown}{more}")
    return d


@dataclass(frozen=True)
class PredictionHistory:
    """Per-instance training-set logits, one row per epoch (shape N x T x K)."""

    ids: tuple[str, ...]
    logits: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.logits, dtype=float)
        if arr.ndim != 3:
            raise ValidationError("history logits must have shape (instances, epochs, classes)")
        if arr.shape[0] != len(self.ids):
            raise ValidationError("history covers a different number of instances than ids")
        if arr.shape[1] < 1:
            raise ValidationError("history must contain at least one epoch")
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("history ids must be unique")
        arr.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "logits", arr)

    @property
    def num_epochs(self) -> int:
        return self.logits.shape[1]

    @property
    def num_classes(self) -> int:
        return self.logits.shape[2]

    def __len__(self) -> int:
        return len(self.ids)
