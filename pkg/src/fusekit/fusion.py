"""Decision-level fusion of per-model class probabilities.

Uncertainty-driven strategies:

* ``ul``: per sample, trust the least uncertain model.
* ``ut``: like ``ul`` when the lowest uncertainty is below a threshold,
  otherwise fall back to the mean ensemble.
* ``uw``: soft voting with inverse-uncertainty weights.
* ``cw``: soft voting with confidence (1 - uncertainty) weights.

Baselines are ``mean`` (average probabilities) and ``max`` (per-class
maximum). All ties resolve to the lowest model or class index.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np

from .core import FusekitError, PredictionSet, ShapeMismatch, argmax_label
from .evaluation import score
from .uncertainty import UncertaintyMatrix, uncertainty_matrix

METHODS = ("ul", "ut", "uw", "cw", "mean", "max")
MEAN_FALLBACK = -1
# Normalization axes for uw/cw weights.
PER_SAMPLE = "per-sample"  # across models, separately for each sample
PER_MODEL = "per-model"  # across samples, separately for each model
NORMS = (PER_SAMPLE, PER_MODEL)


class InvalidThreshold(FusekitError):
    pass


@dataclass(frozen=True)
class FusionResult:
    method: str
    labels: np.ndarray
    # ul/ut: chosen model index per sample (MEAN_FALLBACK for ut fallback).
    chosen: np.ndarray | None = None
    # uw/cw: M x S weights actually applied.
    weights: np.ndarray | None = None
    # S x K fused scores for weight-, mean- and max-based methods.
    fused_probs: np.ndarray | None = None
    threshold: float | None = None

    def provenance(self, s: int) -> str:
        """Human-readable per-sample provenance string."""
        if self.chosen is not None:
            c = int(self.chosen[s])
            return "mean-fallback" if c == MEAN_FALLBACK else f"model:{c}"
        if self.weights is not None:
            return "weights:" + ";".join(repr(float(w)) for w in self.weights[:, s])
        return self.method


@dataclass(frozen=True)
class GridSearchResult:
    best_threshold: float
    best_score: float
    optimized_metric: str
    scores: list[tuple[float, float, float]] = field(default_factory=list)  # (t, UA, WA)


def default_grid() -> list[float]:
    return threshold_grid(0.11, 0.90, 0.01)


def threshold_grid(start: float, end: float, step: float) -> list[float]:
    """Inclusive decimal grid; endpoints exact to the printed digits."""
    a, b, d = (Decimal(str(x)) for x in (start, end, step))
    if d <= 0 or b < a:
        raise InvalidThreshold(f"bad grid ({start}, {end}, {step})")
    n = int((b - a) / d) + 1
    return [float(a + i * d) for i in range(n)]


def _check(ps: PredictionSet, u: UncertaintyMatrix | None = None) -> np.ndarray:
    p = ps.probs
    if u is not None and u.values.shape != p.shape[:2]:
        raise ShapeMismatch(f"uncertainty shape {u.values.shape} != {p.shape[:2]}")
    return p


def _weighted_sum(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Accumulate in model order so results do not depend on reduction strategy.
    q = w[0][:, None] * p[0]
    for m in range(1, p.shape[0]):
        q = q + w[m][:, None] * p[m]
    return q


def _normalize(x: np.ndarray, norm: str) -> np.ndarray:
    """Normalize an M x S nonnegative matrix along the requested axis.

    An all-zero slice gets uniform weights.
    """
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")
    axis = 0 if norm == PER_SAMPLE else 1
    total = x.sum(axis=axis, keepdims=True)
    n = x.shape[axis]
    uniform = np.full_like(x, 1.0 / n)
    return np.where(total > 0, x / np.where(total > 0, total, 1.0), uniform)


def mean_scores(p: np.ndarray) -> np.ndarray:
    q = p[0]
    for m in range(1, p.shape[0]):
        q = q + p[m]
    return q / p.shape[0]


def fuse_mean(ps: PredictionSet) -> FusionResult:
    q = mean_scores(_check(ps))
    return FusionResult("mean", argmax_label(q), fused_probs=q)


def fuse_max(ps: PredictionSet) -> FusionResult:
    q = _check(ps).max(axis=0)
    return FusionResult("max", argmax_label(q), fused_probs=q)


def fuse_ul(ps: PredictionSet, u: UncertaintyMatrix) -> FusionResult:
    p = _check(ps, u)
    chosen = np.argmin(u.values, axis=0)
    picked = p[chosen, np.arange(p.shape[1])]
    return FusionResult("ul", argmax_label(picked), chosen=chosen)


def fuse_ut(ps: PredictionSet, u: UncertaintyMatrix, threshold: float) -> FusionResult:
    if not 0.0 < threshold < 1.0:
        raise InvalidThreshold(f"threshold must lie in (0, 1), got {threshold}")
    ul = fuse_ul(ps, u)
    mean = fuse_mean(ps)
    confident = u.values.min(axis=0) < threshold
    labels = np.where(confident, ul.labels, mean.labels)
    chosen = np.where(confident, ul.chosen, MEAN_FALLBACK)
    return FusionResult("ut", labels, chosen=chosen, threshold=float(threshold))


def fuse_uw(ps: PredictionSet, u: UncertaintyMatrix, norm: str = PER_SAMPLE) -> FusionResult:
    p = _check(ps, u)
    w = _normalize(1.0 / u.values, norm)
    q = _weighted_sum(p, w)
    return FusionResult("uw", argmax_label(q), weights=w, fused_probs=q)


def fuse_cw(ps: PredictionSet, u: UncertaintyMatrix, norm: str = PER_MODEL) -> FusionResult:
    p = _check(ps, u)
    w = _normalize(1.0 - u.values, norm)
    q = _weighted_sum(p, w)
    return FusionResult("cw", argmax_label(q), weights=w, fused_probs=q)


def fuse(
    method: str,
    ps: PredictionSet,
    u: UncertaintyMatrix | None = None,
    *,
    threshold: float | None = None,
    uw_norm: str = PER_SAMPLE,
    cw_norm: str = PER_MODEL,
) -> FusionResult:
    """Dispatch to one of the six fusion strategies by name."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "mean":
        return fuse_mean(ps)
    if method == "max":
        return fuse_max(ps)
    if u is None:
        u = uncertainty_matrix(ps)
    if method == "ul":
        return fuse_ul(ps, u)
    if method == "ut":
        if threshold is None:
            raise InvalidThreshold("ut needs a threshold")
        return fuse_ut(ps, u, threshold)
    if method == "uw":
        return fuse_uw(ps, u, uw_norm)
    return fuse_cw(ps, u, cw_norm)


def search_threshold(
    ps: PredictionSet,
    u: UncertaintyMatrix,
    metric: str = "UA",
    grid: list[float] | None = None,
    workers: int = 1,
) -> GridSearchResult:
    """Grid-search the ut threshold; ties resolve to the lowest threshold."""
    metric = metric.upper()
    if metric not in ("UA", "WA"):
        raise ValueError(f"metric must be UA or WA, got {metric!r}")
    grid = default_grid() if grid is None else list(grid)
    if not grid:
        raise InvalidThreshold("empty threshold grid")
    k = ps.n_classes

    def run(t: float) -> tuple[float, float, float]:
        rep = score(fuse_ut(ps, u, t).labels, ps.truth, k)
        return (t, rep.ua, rep.wa)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(run, grid))
    else:
        scores = [run(t) for t in grid]
    col = 1 if metric == "UA" else 2
    best = max(range(len(scores)), key=lambda i: (scores[i][col], -i))
    return GridSearchResult(scores[best][0], scores[best][col], metric, scores)
