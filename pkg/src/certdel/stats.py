"""Confidence intervals and exact tail probabilities used by the harnesses."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy import stats as _st

CONFIDENCE = 0.99


def hoeffding_halfwidth(trials: int, confidence: float = CONFIDENCE) -> float:
    """Two-sided Hoeffding half-width for a mean of ``trials`` values in [0, 1]."""
    if trials <= 0:
        return math.inf
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * trials))


@dataclass(frozen=True)
class Estimate:
    """A Monte-Carlo proportion with its 99% Hoeffding interval."""

    value: float
    successes: int
    trials: int
    halfwidth: float

    @classmethod
    def from_counts(cls, successes: int, trials: int, confidence: float = CONFIDENCE) -> "Estimate":
        value = successes / trials if trials else math.nan
        return cls(value, int(successes), int(trials), hoeffding_halfwidth(trials, confidence))

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.halfwidth)

    @property
    def upper(self) -> float:
        return min(1.0, self.value + self.halfwidth)

    def contains(self, x: float) -> bool:
        return self.value - self.halfwidth <= x <= self.value + self.halfwidth

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lower"] = self.lower
        d["upper"] = self.upper
        return d


def binom_cdf(k: int, n: int, p: float) -> float:
    """Pr[Bin(n, p) <= k]."""
    return float(_st.binom.cdf(k, n, p))


def binom_sf(k: int, n: int, p: float) -> float:
    """Pr[Bin(n, p) > k]."""
    return float(_st.binom.sf(k, n, p))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def total_variation(p, q) -> float:
    """Half the l1 distance between two distributions given as dicts or arrays."""
    if isinstance(p, dict) or isinstance(q, dict):
        keys = set(p) | set(q)
        return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
    import numpy as np

    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())
