"""Calibration checks for the building blocks: box win rates, reconciliation, pads."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from ..crypto import SyndromeCode, decode, otp_symmetry_selftest, random_bits, syndrome_of
from ..devices import NoisyBoxArray, QuantumBoxArray
from ..errors import UsageError
from ..games import ms_wins
from ..rng import substream
from ..stats import Estimate
from .common import Metadata, run_trials

CHUNK = 10_000


@dataclass
class WinReport:
    device: str
    eps: float
    trials: int
    win: dict
    losses_by_input: list
    metadata: dict

    def to_dict(self) -> dict:
        return asdict(self)


def game_win_probability(eps: float = 0.0, trials: int = 100_000, master_seed: int = 0, device: str = "noisy",
                         threads=None) -> WinReport:
    """Magic square win rate of independent box instances with uniform inputs.

    ``device="noisy"`` samples the Born-rule table with noise ``eps``;
    ``device="quantum"`` simulates each instance's density matrix (ideal, so
    ``eps`` must be 0).
    """
    if device not in ("noisy", "quantum"):
        raise UsageError("device must be noisy or quantum")
    if device == "quantum" and eps != 0:
        raise UsageError("the quantum device has no noise parameter; use eps=0")
    chunk = CHUNK if device == "noisy" else 1000

    def one(c):
        size = min(chunk, trials - c * chunk)
        rng = substream(master_seed, c, "experiment")
        x = rng.integers(0, 3, size=size)
        y = rng.integers(0, 3, size=size)
        dev = NoisyBoxArray(eps) if device == "noisy" else QuantumBoxArray()
        dev.prepare(size, substream(master_seed, c, "device"))
        idx = np.arange(size)
        w = ms_wins(x, y, dev.alice_query(idx, x), dev.bob_query(idx, y))
        lost = np.zeros((3, 3), dtype=np.int64)
        np.add.at(lost, (x[~w], y[~w]), 1)
        return int(w.sum()), lost

    res = run_trials(one, -(-trials // chunk), threads)
    wins = sum(r[0] for r in res)
    lost = sum(r[1] for r in res)
    meta = Metadata(master_seed, {"eps": eps, "trials": trials, "device": device})
    return WinReport(device, eps, trials, Estimate.from_counts(wins, trials).to_dict(), lost.tolist(), meta.to_dict())


@dataclass
class ReconciliationReport:
    length: int
    eps: float
    lam_ec: float
    syndrome_bits: int
    radius: int
    trials: int
    failure: dict
    statuses: dict
    zero_error_exact: bool
    metadata: dict

    def to_dict(self) -> dict:
        return asdict(self)


def reconciliation_experiment(length: int = 60, eps: float = 0.05, lam_ec: float = 0.01, trials: int = 10_000,
                              master_seed: int = 0, threads=None) -> ReconciliationReport:
    """Fresh random code per trial; Bob's key is Alice's with a uniform number (<= radius) of flips.

    A failure is any trial whose decoded key differs from Alice's. Every trial
    also decodes Alice's own key and checks it comes back unchanged.
    """

    def one(i):
        rng = substream(master_seed, i, "experiment")
        code = SyndromeCode.for_params(length, eps, lam_ec, rng)
        k_a = random_bits(rng, length)
        w = int(rng.integers(0, code.radius + 1))
        k_b = k_a.copy()
        k_b[rng.choice(length, size=w, replace=False)] ^= 1
        syn = syndrome_of(code, k_a)
        res = decode(code, k_b, syn)
        same = decode(code, k_a, syn)
        # the ambiguity flag may still be raised; exactness is about the returned key
        exact = same.key is not None and np.array_equal(same.key, k_a) and same.distance == 0
        return res.key is None or not np.array_equal(res.key, k_a), res.status, exact, code.r, code.radius

    res = run_trials(one, trials, threads)
    statuses = {}
    for r in res:
        statuses[r[1]] = statuses.get(r[1], 0) + 1
    meta = Metadata(master_seed, {"length": length, "eps": eps, "lam_ec": lam_ec, "trials": trials})
    return ReconciliationReport(length, eps, lam_ec, res[0][3], res[0][4], trials,
                                Estimate.from_counts(sum(r[0] for r in res), trials).to_dict(),
                                dict(sorted(statuses.items())), all(r[2] for r in res), meta.to_dict())


def random_rational_distribution(rng, support, denominator: int = 64) -> dict:
    """Random distribution over ``support`` with rational weights k/denominator-ish."""
    w = rng.integers(0, denominator, size=len(support)) + 0
    if w.sum() == 0:
        w[0] = 1
    total = int(w.sum())
    return {s: Fraction(int(v), total) for s, v in zip(support, w)}


def otp_selftest_batch(s: int = 3, samples: int = 20, master_seed: int = 0, labels: int = 3) -> dict:
    """Exact pad-symmetry check for ``samples`` random (P_Z, side-info) pairs."""
    if not 1 <= s <= 3:
        raise UsageError("s must be between 1 and 3")
    strings = list(itertools.product((0, 1), repeat=s))
    results = []
    for i in range(samples):
        rng = substream(master_seed, i, "experiment")
        p_z = random_rational_distribution(rng, strings)
        side = {z: random_rational_distribution(rng, [f"e{j}" for j in range(labels)]) for z in strings}
        results.append(bool(otp_symmetry_selftest(s, p_z, side)))
    return {"s": s, "samples": samples, "equal": results, "passed": all(results),
            "metadata": Metadata(master_seed, {"s": s, "samples": samples, "labels": labels}).to_dict()}
