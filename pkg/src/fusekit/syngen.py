"""Seeded synthetic ensembles with controlled accuracy and uncertainty informativeness.

Randomness comes from numpy's ``Generator`` over the PCG64 bit generator,
seeded with the 64-bit ``seed``. Draws happen in this fixed order:

1. ``truth``: class per sample (uniform integers, or a permutation of a
   balanced label multiset when ``balanced``).
2. correctness: one permutation per model. With ``cover``, a shared
   permutation is first split into per-model chunks (sized in proportion to
   each model's correct count) so every sample has one base correct model,
   then each model's remaining correct slots come from one permutation of
   the samples outside its chunk.
3. ``informative``: one uniform per sample, compared against ``r``.
4. ``delta``: one uniform per (model, sample).
5. wrong class: one integer in [0, K-1) per (model, sample).

Each row puts ``1 - delta`` on its predicted class and spreads ``delta``
evenly over the rest, with ``delta`` in [0.02, 0.3]. On informative samples,
correct models draw ``delta`` from [0.02, 0.16) and incorrect ones from
[0.16, 0.3), so every correct model is strictly less uncertain than every
incorrect one. On the remaining samples all models share the full range.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_FLOOR, Decimal

import numpy as np

from .core import PredictionSet

DELTA_LO = 0.02
DELTA_MID = 0.16
DELTA_HI = 0.30


@dataclass(frozen=True)
class SynSpec:
    samples: int
    classes: int
    accs: tuple[float, ...]
    informativeness: float = 1.0
    seed: int = 0
    balanced: bool = False  # exactly S/K samples per class
    cover: bool = False  # every sample predicted correctly by >= 1 model
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "accs", tuple(float(a) for a in self.accs))
        if self.classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.classes}")
        if self.samples < 1:
            raise ValueError(f"need at least 1 sample, got {self.samples}")
        if not self.accs:
            raise ValueError("need at least one model accuracy")
        if any(not 0 <= a <= 1 for a in self.accs):
            raise ValueError(f"accuracies must lie in [0, 1]: {self.accs}")
        if not 0 <= self.informativeness <= 1:
            raise ValueError(f"informativeness must lie in [0, 1]: {self.informativeness}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.names and len(self.names) != len(self.accs):
            raise ValueError("one name per model required")
        if self.balanced and self.samples % self.classes:
            raise ValueError("balanced truth needs samples divisible by classes")
        if self.cover and sum(self.n_correct) < self.samples:
            raise ValueError(
                f"cannot cover {self.samples} samples with {sum(self.n_correct)} correct slots"
            )

    @property
    def models(self) -> int:
        return len(self.accs)

    @property
    def n_correct(self) -> list[int]:
        """floor(acc * S) per model, computed in decimal to avoid float drift."""
        return [
            int((Decimal(repr(a)) * self.samples).to_integral_value(rounding=ROUND_FLOOR))
            for a in self.accs
        ]


def _base_quotas(counts: list[int], s: int) -> list[int]:
    """Split ``s`` samples over models in proportion to their correct counts."""
    total = sum(counts)
    quotas = [n * s // total for n in counts]
    left = s - sum(quotas)
    for m in range(len(counts)):
        if left == 0:
            break
        if quotas[m] < counts[m]:
            quotas[m] += 1
            left -= 1
    return quotas


def _correct_mask(spec: SynSpec, rng: np.random.Generator) -> np.ndarray:
    s, counts = spec.samples, spec.n_correct
    mask = np.zeros((spec.models, s), dtype=bool)
    if not spec.cover:
        for m, n in enumerate(counts):
            mask[m, rng.permutation(s)[:n]] = True
        return mask
    perm = rng.permutation(s)
    start = 0
    for m, q in enumerate(_base_quotas(counts, s)):
        mask[m, perm[start:start + q]] = True
        start += q
    for m, n in enumerate(counts):
        rest = np.flatnonzero(~mask[m])
        mask[m, rng.permutation(rest)[: n - mask[m].sum()]] = True
    return mask


def generate(spec: SynSpec) -> PredictionSet:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    s, k, m = spec.samples, spec.classes, spec.models

    if spec.balanced:
        truth = rng.permutation(np.arange(s) % k)
    else:
        truth = rng.integers(0, k, size=s)
    correct = _correct_mask(spec, rng)
    informative = rng.random(s) < spec.informativeness
    x = rng.random((m, s))
    offset = rng.integers(0, k - 1, size=(m, s))

    full = DELTA_LO + x * (DELTA_HI - DELTA_LO)
    low = DELTA_LO + x * (DELTA_MID - DELTA_LO)
    high = DELTA_MID + x * (DELTA_HI - DELTA_MID)
    delta = np.where(informative, np.where(correct, low, high), full)

    wrong = (truth + 1 + offset) % k
    predicted = np.where(correct, truth, wrong)
    probs = np.repeat((delta / (k - 1))[..., None], k, axis=2)
    np.put_along_axis(probs, predicted[..., None], (1.0 - delta)[..., None], axis=2)

    names = spec.names or tuple(f"model{i}" for i in range(m))
    return PredictionSet.from_arrays(list(probs), truth, names=names)
