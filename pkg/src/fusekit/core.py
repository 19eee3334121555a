"""Domain types for aligned multi-model predictions.

A :class:`PredictionSet` holds M models' S x K class-probability (or logit)
matrices for one evaluation set, plus ground-truth label indices.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

ROW_SUM_TOL = 1e-6
KINDS = ("probabilities", "logits")


class FusekitError(Exception):
    """Base class for validation errors (CLI exit code 1)."""


class ShapeMismatch(FusekitError):
    pass


class RowSumViolation(FusekitError):
    pass


class NonFinite(FusekitError):
    pass


class EmptySet(FusekitError):
    pass


class LabelOutOfRange(FusekitError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModelPredictions:
    model_name: str
    matrix: np.ndarray
    kind: str = "probabilities"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "matrix", _frozen(np.asarray(self.matrix, dtype=float)))

    @cached_property
    def probabilities(self) -> np.ndarray:
        """S x K probabilities: softmax of logits, or row-renormalized probabilities."""
        if self.kind == "logits":
            p = softmax(self.matrix)
        else:
            p = self.matrix / self.matrix.sum(axis=1, keepdims=True)
        return _frozen(p)


@dataclass(frozen=True)
class PredictionSet:
    models: tuple[ModelPredictions, ...]
    truth: np.ndarray
    classes: tuple[str, ...] = field(default=())
    sample_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "truth", _frozen(np.asarray(self.truth, dtype=np.int64)))
        if not self.classes and self.models:
            k = self.models[0].matrix.shape[-1]
            object.__setattr__(self, "classes", tuple(f"c{i}" for i in range(k)))
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.sample_ids:
            width = len(str(max(len(self.truth) - 1, 0)))
            ids = tuple(f"s{i:0{width}d}" for i in range(len(self.truth)))
            object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))

    @classmethod
    def from_arrays(
        cls,
        probs: Sequence[np.ndarray] | np.ndarray,
        truth: Sequence[int],
        names: Sequence[str] | None = None,
        classes: Sequence[str] = (),
        kind: str = "probabilities",
    ) -> "PredictionSet":
        names = names or [f"m{i}" for i in range(len(probs))]
        models = tuple(ModelPredictions(n, p, kind) for n, p in zip(names, probs))
        return cls(models, np.asarray(truth), tuple(classes))

    @property
    def n_models(self) -> int:
        return len(self.models)

    @property
    def n_samples(self) -> int:
        return len(self.truth)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def names(self) -> list[str]:
        return [m.model_name for m in self.models]

    @cached_property
    def probs(self) -> np.ndarray:
        """M x S x K stacked probabilities in manifest order."""
        return _frozen(np.stack([m.probabilities for m in self.models]))


def validate(ps: PredictionSet) -> None:
    """Raise the first violated PredictionSet invariant, or return None."""
    if not ps.models:
        raise EmptySet("prediction set has no models")
    first = ps.models[0]
    if first.matrix.ndim != 2:
        raise ShapeMismatch(f"model {first.model_name!r}: matrix must be 2-D")
    s, k = first.matrix.shape
    if s == 0:
        raise EmptySet(f"model {first.model_name!r} has no samples")
    if k < 2:
        raise ShapeMismatch(f"model {first.model_name!r}: need K >= 2 classes, got {k}")
    if ps.classes and len(ps.classes) != k:
        raise ShapeMismatch(f"{len(ps.classes)} class names for K={k}")
    if len(set(ps.classes)) != len(ps.classes):
        raise ShapeMismatch("class names are not unique")
    for m in ps.models:
        if m.matrix.shape != (s, k):
            raise ShapeMismatch(
                f"model {m.model_name!r} has shape {m.matrix.shape}, expected {(s, k)}"
            )
        bad = ~np.isfinite(m.matrix)
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            raise NonFinite(f"model {m.model_name!r} row {row}: non-finite entry")
        if m.kind == "probabilities":
            out = (m.matrix < 0) | (m.matrix > 1)
            if out.any():
                row = int(np.argwhere(out)[0][0])
                raise RowSumViolation(
                    f"model {m.model_name!r} row {row}: entry outside [0, 1]"
                )
            off = np.abs(m.matrix.sum(axis=1) - 1.0) > ROW_SUM_TOL
            if off.any():
                row = int(np.flatnonzero(off)[0])
                total = m.matrix[row].sum()
                raise RowSumViolation(
                    f"model {m.model_name!r} row {row}: sums to {total!r}"
                )
    if ps.truth.shape != (s,):
        raise ShapeMismatch(f"truth has shape {ps.truth.shape}, expected ({s},)")
    if len(ps.sample_ids) != s or len(set(ps.sample_ids)) != s:
        raise ShapeMismatch(f"need {s} unique sample ids, got {len(set(ps.sample_ids))}")
    out = (ps.truth < 0) | (ps.truth >= k)
    if out.any():
        row = int(np.flatnonzero(out)[0])
        raise LabelOutOfRange(f"truth row {row}: label {ps.truth[row]} not in [0, {k})")


def softmax(z: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    z = np.asarray(z, dtype=float)
    if not np.isfinite(z).all():
        raise NonFinite("softmax input contains NaN or Inf")
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def argmax_label(probs: np.ndarray) -> int | np.ndarray:
    """Index of the maximum along the last axis; ties go to the lowest index."""
    probs = np.asarray(probs, dtype=float)
    if probs.shape[-1] == 0:
        raise ValueError("argmax of an empty vector")
    if np.isnan(probs).any():
        raise NonFinite("argmax input contains NaN")
    idx = np.argmax(probs, axis=-1)
    return int(idx) if probs.ndim == 1 else idx


def thread_count() -> int:
    """Worker cap from FUSEKIT_THREADS; defaults to all cores."""
    raw = os.environ.get("FUSEKIT_THREADS", "").strip()
    if raw in ("", "max"):
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"FUSEKIT_THREADS must be >= 1, got {raw!r}")
    return n

