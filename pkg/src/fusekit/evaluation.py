"""UA/WA scoring, Cohen's d on uncertainty vs. correctness, and improvement counts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import FusekitError, ShapeMismatch

NO_EFFECT = "no_effect"
MIDDLE_EFFECT = "middle_effect"
LARGE_EFFECT = "large_effect"
SMALL_D = 0.2
LARGE_D = 0.8
N_BINS = 20


class DegenerateGroups(FusekitError):
    """Cohen's d is undefined: a group has n < 2 or the pooled SD is zero."""


class KeyMismatch(FusekitError):
    pass


@dataclass(frozen=True)
class EvaluationReport:
    ua: float
    wa: float
    confusion: np.ndarray  # K x K, rows = truth, cols = predicted
    per_class_recall: np.ndarray  # NaN for classes absent from truth


def score(pred, truth, k: int) -> EvaluationReport:
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ShapeMismatch(f"pred {pred.shape} vs truth {truth.shape}")
    if pred.size == 0:
        raise ShapeMismatch("cannot score an empty label vector")
    for name, v in (("pred", pred), ("truth", truth)):
        if v.min() < 0 or v.max() >= k:
            raise ShapeMismatch(f"{name} labels outside [0, {k})")
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (truth, pred), 1)
    support = confusion.sum(axis=1)
    diag = np.diag(confusion)
    recall = np.full(k, np.nan)
    has = support > 0
    recall[has] = diag[has] / support[has]
    ua = float(recall[has].mean())
    wa = float(diag.sum() / truth.size)
    return EvaluationReport(ua, wa, confusion, recall)


def _sample_stats(x: np.ndarray) -> tuple[int, float, float]:
    n = len(x)
    mean = float(x.mean()) if n else math.nan
    sd = float(x.std(ddof=1)) if n >= 2 else math.nan
    return n, mean, sd


def cohens_d(u_correct, u_incorrect) -> float:
    """Standardized mean difference (incorrect - correct) with pooled sample SD."""
    a = np.asarray(u_correct, dtype=float)
    b = np.asarray(u_incorrect, dtype=float)
    n1, n2 = len(a), len(b)
    if n1 < 2 or n2 < 2:
        raise DegenerateGroups(f"need n >= 2 in both groups, got {n1} and {n2}")
    pooled = math.sqrt(
        ((n1 - 1) * a.var(ddof=1) + (n2 - 1) * b.var(ddof=1)) / (n1 + n2 - 2)
    )
    if pooled == 0:
        raise DegenerateGroups("pooled standard deviation is zero")
    return float((b.mean() - a.mean()) / pooled)


def effect_category(d: float) -> str:
    if not math.isfinite(d):
        raise ValueError(f"effect size must be finite, got {d}")
    ad = abs(d)
    if ad < SMALL_D:
        return NO_EFFECT
    if ad < LARGE_D:
        return MIDDLE_EFFECT
    return LARGE_EFFECT


def bin_edges() -> np.ndarray:
    return np.arange(N_BINS + 1) / N_BINS


def correctness_histogram(u, correct) -> dict[str, np.ndarray]:
    """Counts per 0.05-wide uncertainty bin for correct and incorrect samples.

    Bins are [lo, hi) except the last, which is closed so u = 1 is counted.
    """
    u = np.asarray(u, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    if u.shape != correct.shape:
        raise ShapeMismatch(f"u {u.shape} vs correct {correct.shape}")
    idx = np.minimum(np.floor(u * N_BINS).astype(np.int64), N_BINS - 1)
    idx = np.maximum(idx, 0)
    return {
        "edges": bin_edges(),
        "correct": np.bincount(idx[correct], minlength=N_BINS),
        "incorrect": np.bincount(idx[~correct], minlength=N_BINS),
    }


@dataclass(frozen=True)
class GroupStats:
    n: int
    mean: float
    sd: float


@dataclass(frozen=True)
class EffectReport:
    d: float | None  # None when the groups are degenerate
    category: str | None
    correct: GroupStats
    incorrect: GroupStats
    histogram: dict[str, np.ndarray]
    degenerate_reason: str | None = None


def effect_report(u, correct) -> EffectReport:
    u = np.asarray(u, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    hist = correctness_histogram(u, correct)
    good = GroupStats(*_sample_stats(u[correct]))
    bad = GroupStats(*_sample_stats(u[~correct]))
    try:
        d = float(cohens_d(u[correct], u[~correct]))
    except DegenerateGroups as exc:
        return EffectReport(None, None, good, bad, hist, str(exc))
    return EffectReport(d, effect_category(d), good, bad, hist)


# Score tables: {(dataset, combination, method, metric): score} for ensembles,
# {(dataset, model, metric): score} for single models.
EnsembleTable = Mapping[tuple[str, str, str, str], float]
SingleTable = Mapping[tuple[str, str, str], float]


def best_single(single: SingleTable) -> dict[tuple[str, str], float]:
    """Best single-model score per (dataset, metric)."""
    best: dict[tuple[str, str], float] = {}
    for (dataset, _model, metric), v in single.items():
        key = (dataset, metric)
        best[key] = max(best.get(key, -math.inf), v)
    return best


def count_improvements(
    ensemble: EnsembleTable,
    single: SingleTable,
    methods: Iterable[str] | None = None,
) -> dict[str, int]:
    """Count ensemble cells strictly above the best single model.

    The reference is the best single-model score for the same dataset and
    metric, taken over every single model listed for that dataset.
    """
    best = best_single(single)
    seen = list(dict.fromkeys(k[2] for k in ensemble))
    methods = list(methods) if methods is not None else seen
    counts = {m: 0 for m in methods}
    for (dataset, _combo, method, metric), v in ensemble.items():
        if (dataset, metric) not in best:
            raise KeyMismatch(f"no single-model score for {dataset!r} / {metric!r}")
        if method in counts and v > best[(dataset, metric)]:
            counts[method] += 1
    return counts
