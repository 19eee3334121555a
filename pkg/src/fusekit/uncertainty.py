"""Entropy-based uncertainty of class-probability predictions.

Uncertainty is Shannon entropy (natural log) divided by its maximum ``ln K``,
so 0 means a one-hot prediction and 1 a uniform one. The log base cancels in
the ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ROW_SUM_TOL, FusekitError, PredictionSet

EPS = 1e-6


class InvalidDistribution(FusekitError):
    pass


@dataclass(frozen=True)
class UncertaintyMatrix:
    values: np.ndarray  # M x S, entries in [EPS, 1]
    clamped: np.ndarray  # M x S bool, True where the raw value was below EPS

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    # 0 * ln 0 := 0
    logs = np.log(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=-1)


def entropy(probs) -> float:
    """Shannon entropy in nats of a single probability vector."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidDistribution("expected a non-empty 1-D vector")
    if not np.isfinite(p).all() or (p < 0).any() or (p > 1).any():
        raise InvalidDistribution(f"entries must lie in [0, 1]: {p.tolist()}")
    if abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise InvalidDistribution(f"vector sums to {p.sum()!r}")
    return max(float(_entropy_rows(p)), 0.0)


def normalize_entropy(h: float, k: int) -> float:
    if k < 2:
        raise InvalidDistribution(f"normalization needs K >= 2, got {k}")
    top = math.log(k)
    if h < 0 or h > top + 1e-12:
        raise InvalidDistribution(f"entropy {h} outside [0, ln {k}]")
    return min(max(h / top, 0.0), 1.0)


def normalized_uncertainty(probs: np.ndarray) -> np.ndarray:
    """Vectorized normalized entropy over the last axis, clipped into [0, 1]."""
    p = np.asarray(probs, dtype=float)
    k = p.shape[-1]
    if k < 2:
        raise InvalidDistribution(f"normalization needs K >= 2, got {k}")
    return np.clip(_entropy_rows(p) / math.log(k), 0.0, 1.0)


def uncertainty_matrix(ps: PredictionSet, eps: float = EPS) -> UncertaintyMatrix:
    raw = normalized_uncertainty(ps.probs)
    clamped = raw < eps
    values = np.clip(raw, eps, 1.0)
    values.flags.writeable = False
    clamped.flags.writeable = False
    return UncertaintyMatrix(values, clamped)
