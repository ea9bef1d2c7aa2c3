"""Monte-Carlo check of the sampling-without-replacement tail bound.

For a binary string Z of length l and a uniformly random test set T of
size round(gamma l) drawn independently of Z, the event

    sum_T Z >= (1 - eps)|T|   and   sum_{not T} Z < (1 - 2 eps)(l - |T|)

has probability at most 2^(-2 eps^2 gamma l). Because T is uniform, only
the weight K of Z matters and the event probability is a hypergeometric
sum, which serves as the exact oracle.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from ..errors import ResourceError, UsageError
from ..protocol.params import round_half_up
from ..rng import substream
from ..stats import Estimate
from .common import Metadata, run_trials

CHUNK = 1000
MAX_LENGTH = 1 << 20


def serfling_bound(l: int, gamma: float, eps: float) -> float:
    return 2 ** (-2 * eps**2 * gamma * l)


def _thresholds(l, t, eps):
    return math.ceil((1 - eps) * t - 1e-12), (1 - 2 * eps) * (l - t)


def exact_event_probability(l: int, t: int, eps: float, weight: int) -> float:
    """Pr[event] for any Z of the given weight."""
    need, rest = _thresholds(l, t, eps)
    xs = np.arange(max(need, 0), min(t, weight) + 1)
    xs = xs[(weight - xs) < rest - 1e-12]
    return float(sps.hypergeom.pmf(xs, l, weight, t).sum()) if xs.size else 0.0


def worst_weight(l: int, t: int, eps: float) -> tuple:
    """(weight, probability) maximising the event probability."""
    probs = [exact_event_probability(l, t, eps, k) for k in range(l + 1)]
    k = int(np.argmax(probs))
    return k, probs[k]


# adversarial Z generators: (l, t, eps, rng) -> uint8 array of length l
def _all_ones(l, t, eps, rng):
    return np.ones(l, dtype=np.uint8)


def _all_zeros(l, t, eps, rng):
    return np.zeros(l, dtype=np.uint8)


def _iid(l, t, eps, rng):
    # i.i.d. with mean halfway between the two thresholds
    return (rng.random(l) < 1 - 1.5 * eps).astype(np.uint8)


def _block(l, t, eps, rng):
    # a solid run of ones at a random offset, sized at the worst weight
    k, _ = worst_weight(l, t, eps)
    z = np.zeros(l, dtype=np.uint8)
    z[:k] = 1
    return np.roll(z, int(rng.integers(0, l)))


def _threshold_tuned(l, t, eps, rng):
    k, _ = worst_weight(l, t, eps)
    z = np.zeros(l, dtype=np.uint8)
    z[rng.choice(l, size=k, replace=False)] = 1
    return z


def _alternating(l, t, eps, rng):
    return (np.arange(l) % 2 == 0).astype(np.uint8)


GENERATORS = {
    "all-ones": _all_ones,
    "all-zeros": _all_zeros,
    "iid": _iid,
    "block": _block,
    "threshold-tuned": _threshold_tuned,
    "alternating": _alternating,
}


@dataclass
class SerflingReport:
    generator: str
    frequency: dict
    bound: float
    exact: float
    weight: int
    passed: bool
    metadata: dict

    def to_dict(self) -> dict:
        return asdict(self)


def serfling_mc_check(l: int, gamma: float, eps: float, generator: str, trials: int,
                      master_seed: int = 0, threads=None) -> SerflingReport:
    """Sample Z once, then draw T literally ``trials`` times and count the event."""
    if generator not in GENERATORS:
        raise UsageError(f"unknown generator {generator!r}; choose from {sorted(GENERATORS)}")
    if not (0 < gamma < 1 and 0 <= eps < 1 and l >= 2):
        raise UsageError("need l >= 2, 0 < gamma < 1 and 0 <= eps < 1")
    if l > MAX_LENGTH:
        raise ResourceError(f"l={l} exceeds the Monte-Carlo limit {MAX_LENGTH}")
    t = round_half_up(gamma * l)
    z = GENERATORS[generator](l, t, eps, substream(master_seed, 0, "experiment"))
    need, rest = _thresholds(l, t, eps)
    total = int(z.sum())
    chunks = -(-trials // CHUNK)

    def chunk(c):
        size = min(CHUNK, trials - c * CHUNK)
        rng = substream(master_seed, c + 1, "experiment")
        keys = rng.random((size, l))
        T = np.argpartition(keys, t - 1, axis=1)[:, :t]
        s_T = z[T].sum(axis=1, dtype=np.int64)
        return int(np.count_nonzero((s_T >= need) & (total - s_T < rest - 1e-12)))

    hits = sum(run_trials(chunk, chunks, threads))
    est = Estimate.from_counts(hits, trials)
    bound = serfling_bound(l, gamma, eps)
    meta = Metadata(master_seed, {"l": l, "gamma": gamma, "eps": eps, "trials": trials, "test_size": t})
    return SerflingReport(generator, est.to_dict(), bound, exact_event_probability(l, t, eps, total), total,
                          est.lower <= bound, meta.to_dict())
