"""Attacks on the deletion check.

Each attack runs the full protocol with D=1 and a message drawn uniformly
from {m*, 0^n}; it reports the deletion acceptance rate and how often Bob's
final output identifies which of the two messages was sent. An honest
baseline and honest D=0 decryption are reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..devices import ClassicalColludingDevice, NoisyBoxArray, QuantumBoxArray, measure_early_acceptance
from ..errors import UsageError
from ..games import EVEN_ANSWERS, ODD_ANSWERS
from ..protocol import ColludingClassicalBob, HonestBob, MeasureEarlyBob, ProtocolParams, RandomCertificateBob, run_protocol
from ..rng import substream
from ..stats import Estimate, binom_sf
from .common import Metadata, run_trials

ATTACKS = {
    "honest": (HonestBob, lambda p: NoisyBoxArray(p.eps)),
    "random-certificate": (RandomCertificateBob, lambda p: NoisyBoxArray(p.eps)),
    "measure-early": (MeasureEarlyBob, lambda p: QuantumBoxArray()),
    "collude-classical": (ColludingClassicalBob, lambda p: ClassicalColludingDevice()),
}
ALIASES = {"measure-early-keep-key": "measure-early", "collude-with-eve-classical": "collude-classical"}


def resolve_attack(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in ATTACKS:
        raise UsageError(f"unknown attack {name!r}; choose from {sorted(ATTACKS)}")
    return name


def _candidate(n: int) -> np.ndarray:
    # a fixed non-zero message: alternating bits starting with 1
    return (np.arange(n) % 2 == 0).astype(np.uint8)


@dataclass
class AttackReport:
    attack: str
    trials: int
    p_top: dict
    acceptance: dict
    guess_given_accept: dict | None
    decrypt_given_accept: dict | None
    honest_decrypt_d0: dict
    monotone: bool
    per_round: dict | None
    metadata: dict
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _run_attack(params, attack, trials, master_seed, threads):
    bob_cls, dev = ATTACKS[attack]
    mstar = _candidate(params.n)
    zero = np.zeros(params.n, dtype=np.uint8)

    def one(i):
        rng = substream(master_seed, i, "distinguisher")
        sent_zero = bool(rng.integers(0, 2))
        m = zero if sent_zero else mstar
        o = run_protocol(params, m, 1, device=dev(params), bob=bob_cls(), master_seed=master_seed, trial_index=i).outcome
        accepted = bool(o.O and o.F)
        out = o.M_tilde
        if out is not None and np.array_equal(out, mstar):
            g_zero = False
        elif out is not None and np.array_equal(out, zero):
            g_zero = True
        else:
            g_zero = bool(rng.integers(0, 2))
        dl = o.match_counts.get("deletion", {})
        return (o.O, accepted, g_zero == sent_zero, out is not None and np.array_equal(out, m),
                dl.get("matches", 0), dl.get("size", 0))

    return run_trials(one, trials, threads)


def honest_decrypt_rate(params: ProtocolParams, trials: int, master_seed: int = 0, threads=None) -> Estimate:
    """Pr[O = top and M~ = M] for honest parties with D=0."""
    mstar = _candidate(params.n)

    def one(i):
        o = run_protocol(params, mstar, 0, master_seed=master_seed, trial_index=i).outcome
        return bool(o.O and np.array_equal(o.M_tilde, mstar))

    return Estimate.from_counts(sum(run_trials(one, trials, threads)), trials)


def attack_suite(params: ProtocolParams, attack: str, trials: int, master_seed: int = 0, threads=None) -> AttackReport:
    attack = resolve_attack(attack)
    res = _run_attack(params, attack, trials, master_seed, threads)
    n_acc = sum(r[1] for r in res)
    top = Estimate.from_counts(sum(r[0] for r in res), trials)
    acc = Estimate.from_counts(n_acc, trials)
    # conditional rates are undefined when nothing was accepted
    guess = Estimate.from_counts(sum(r[2] for r in res if r[1]), n_acc).to_dict() if n_acc else None
    dec = Estimate.from_counts(sum(r[3] for r in res if r[1]), n_acc).to_dict() if n_acc else None
    base = honest_decrypt_rate(params, trials, master_seed, threads)
    joint = Estimate.from_counts(sum(r[1] and r[3] for r in res), trials)
    # deleting and then decrypting cannot beat simply keeping the key
    monotone = joint.lower <= base.upper
    per_round = None
    if attack == "measure-early":
        rounds = sum(r[5] for r in res)
        est = Estimate.from_counts(sum(r[4] for r in res), max(rounds, 1))
        oracle = measure_early_acceptance()
        per_round = {"estimate": est.to_dict(), "oracle": oracle, "within_ci": est.contains(oracle)}
    return AttackReport(attack, trials, top.to_dict(), acc.to_dict(), guess, dec, base.to_dict(),
                        monotone, per_round, Metadata(master_seed, params.to_dict()).to_dict())


@dataclass
class DeletionOnlyReport:
    rounds: int
    eps: float
    trials: int
    threshold: int
    acceptance: dict
    round_match: dict
    oracle: float
    metadata: dict

    def to_dict(self) -> dict:
        return asdict(self)


def random_certificate_deletion_only(rounds: int = 60, eps: float = 0.05, trials: int = 100_000,
                                     master_seed: int = 0, chunk: int = 10_000) -> DeletionOnlyReport:
    """Vectorized deletion check against uniformly random odd-parity certificates.

    Only the |S \\ T| checked boxes matter for F, so each trial samples Alice's
    honest outputs (uniform even-parity strings given x), x, y' and Bob's
    random certificate for those boxes and applies the acceptance threshold.
    """
    if rounds < 1 or not 0 <= eps < 0.5:
        raise UsageError("need rounds >= 1 and 0 <= eps < 1/2")
    thr = int(math.ceil((1 - 2 * eps) * rounds - 1e-12))
    accepted = matched = 0
    for c in range(-(-trials // chunk)):
        size = min(chunk, trials - c * chunk)
        rng = substream(master_seed, c, "experiment")
        x = rng.integers(0, 3, size=(size, rounds))
        yp = rng.integers(0, 3, size=(size, rounds))
        a = EVEN_ANSWERS[rng.integers(0, 4, size=(size, rounds))]
        b = ODD_ANSWERS[rng.integers(0, 4, size=(size, rounds))]
        m = np.take_along_axis(a, yp[..., None], -1)[..., 0] == np.take_along_axis(b, x[..., None], -1)[..., 0]
        per = m.sum(axis=1)
        matched += int(per.sum())
        accepted += int(np.count_nonzero(per >= thr))
    meta = Metadata(master_seed, {"rounds": rounds, "eps": eps, "trials": trials})
    return DeletionOnlyReport(rounds, eps, trials, thr, Estimate.from_counts(accepted, trials).to_dict(),
                              Estimate.from_counts(matched, trials * rounds).to_dict(), binom_sf(thr - 1, rounds, 0.5),
                              meta.to_dict())
