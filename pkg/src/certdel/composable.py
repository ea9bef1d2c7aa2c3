"""Ideal certified-deletion functionality, simulators and distinguishing experiments.

Four honesty cases are supported, named by which parties are dishonest:
``"none"``, ``"eve"``, ``"bob"`` and ``"bob+eve"``.

A *real* system is the protocol itself. An *ideal* system is the ideal
functionality composed with a simulator that talks to the dishonest parties.
Both expose the same :class:`View` to a distinguisher, which outputs a guess
bit G. The advantage is |P_real(G=0) - P_ideal(G=0)|.
"""

from __future__ import annotations

import hashlib
import io
import csv
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .crypto import bits_to_hex, random_bits
from .errors import ProtocolOrderError, UsageError
from .protocol import HonestBob, ProtocolParams, run_protocol
from .protocol.roles import EveRole
from .protocol.transcript import TIME_RANK
from .rng import substream
from .stats import Estimate, hoeffding_halfwidth

CASES = ("none", "eve", "bob", "bob+eve")


def _check_case(case):
    if case not in CASES:
        raise UsageError(f"unknown honesty case {case!r}; expected one of {CASES}")


class IdealEcd:
    """Step-by-step ideal functionality with enforced input order.

    Call order: ``abort_inputs`` (dishonest parties' O^B / O^E, t1', t1''),
    ``output_O`` (t1), ``input_message`` (t2), ``input_deletion`` (t3),
    ``input_flag`` (t4', dishonest Bob and D=1 only), ``output_F`` (t4),
    ``output_M_tilde`` (t5). Everything after O is refused when O is false.
    """

    STAGES = ("init", "aborts", "O", "M", "D", "F", "done")

    def __init__(self, case: str, n: int):
        _check_case(case)
        self.case = case
        self.n = n
        self.bob_honest = "bob" not in case
        self.eve_honest = "eve" not in case
        self.stage = "init"
        self.o_b = self.o_e = True
        self.O = None
        self.F = None

    def _step(self, allowed, new):
        if self.stage not in allowed:
            raise ProtocolOrderError(f"ideal functionality: {new} not allowed after {self.stage}")
        if new not in ("aborts", "O") and self.O is False:
            raise ProtocolOrderError("the run was aborted")
        self.stage = new

    def abort_inputs(self, o_b: bool = True, o_e: bool = True):
        self._step(("init",), "aborts")
        if self.bob_honest and not o_b:
            raise UsageError("honest Bob has no abort input")
        if self.eve_honest and not o_e:
            raise UsageError("honest Eve has no abort input")
        self.o_b, self.o_e = bool(o_b), bool(o_e)

    def output_O(self) -> bool:
        if self.stage == "init":
            self.abort_inputs()
        self._step(("aborts",), "O")
        self.O = self.o_b and self.o_e
        return self.O

    def input_message(self, m):
        self._step(("O",), "M")
        m = np.asarray(m, dtype=np.uint8)
        if m.shape != (self.n,):
            raise UsageError(f"message must have {self.n} bits")
        self.m = m

    def input_deletion(self, d: int):
        self._step(("M",), "D")
        if d not in (0, 1):
            raise UsageError("D must be 0 or 1")
        self.d = d
        return d  # output to Bob (t3 dot) and to dishonest Eve (t3 double dot)

    def input_flag(self, f: bool):
        if self.bob_honest:
            raise UsageError("honest Bob has no deletion flag input")
        if self.stage != "D" or self.d != 1:
            raise ProtocolOrderError("the deletion flag is only accepted after D=1")
        self._step(("D",), "F")
        self.F = bool(f)

    def output_F(self):
        if self.d == 0:
            return None
        if self.bob_honest and self.stage == "D":
            self._step(("D",), "F")
            self.F = True
        if self.stage != "F":
            raise ProtocolOrderError("dishonest Bob has not provided F")
        return self.F

    def output_M_tilde(self) -> np.ndarray:
        if self.d == 1 and self.F is None:
            self.output_F()
        self._step(("D", "F"), "done")
        if self.d == 1 and self.F:
            return np.zeros(self.n, dtype=np.uint8)
        return self.m.copy()


def ideal_run(case: str, n: int, m, d: int, o_b: bool = True, o_e: bool = True, f: bool | None = None) -> dict:
    """Run the ideal functionality in one go and return its outputs."""
    ideal = IdealEcd(case, n)
    ideal.abort_inputs(o_b, o_e)
    out = {"O": ideal.output_O(), "F": None, "M_tilde": None, "D": None}
    if not out["O"]:
        return out
    ideal.input_message(m)
    out["D"] = ideal.input_deletion(d)
    if d == 1 and not ideal.bob_honest:
        ideal.input_flag(bool(f))
    out["F"] = ideal.output_F()
    out["M_tilde"] = ideal.output_M_tilde()
    return out


# -- views -----------------------------------------------------------------------

@dataclass
class View:
    """What a distinguisher sees at the end of one interaction."""

    m: np.ndarray
    d: int
    O: bool
    F: bool | None
    bob_output: np.ndarray | None
    bob_events: list = field(default_factory=list)
    eve_events: list = field(default_factory=list)

    def released(self, before: str | None = None) -> tuple:
        """Hashable summary of every released register, optionally before a time tag."""
        keep = lambda evs: tuple(
            (e["time_tag"], e["label"], e["payload_hex"], e["bit_len"])
            for e in evs
            if before is None or TIME_RANK[e["time_tag"]] < TIME_RANK[before]
        )
        return keep(self.bob_events), keep(self.eve_events)


def _bob_events(tr):
    return [e.to_dict() for e in tr.events if e.receiver in ("Bob", "all") or (e.sender == "Bob" and e.receiver == "Alice")]


def _eve_events(tr):
    return [e.to_dict() for e in tr.eve_view] + [e.to_dict() for e in tr.events if e.receiver == "all"]


def _view(case, m, d, O, F, bob_output, tr) -> View:
    return View(
        m=m,
        d=d,
        O=O,
        F=F,
        bob_output=bob_output,
        bob_events=_bob_events(tr) if "bob" in case else [],
        eve_events=_eve_events(tr) if "eve" in case else [],
    )


def real_system(case, params, m, d, bob=None, eve=None, device=None, master_seed=0, trial_index=0, u1_override=None):
    """The protocol with the given roles; returns (View, RunResult)."""
    _check_case(case)
    if "bob" not in case:
        bob = HonestBob()
    res = run_protocol(params, m, d, device=device, bob=bob, eve=eve, master_seed=master_seed,
                       trial_index=trial_index, u1_override=u1_override)
    o = res.outcome
    return _view(case, m, d, o.O, o.F, o.M_tilde, res.transcript), res


def ideal_system(case, params, m, d, bob=None, eve=None, device=None, master_seed=0, trial_index=0, u1_override=None):
    """Ideal functionality plus the simulator for ``case``; returns (View, RunResult).

    With a dishonest Bob, the simulator runs a simulated Alice against him,
    releases a dummy ciphertext C1 drawn without the message, forwards the
    simulated test result and deletion flag to the functionality and at the
    reveal sets U1 = M' xor h(K) xor C1, where M' is what the functionality
    gives Bob (M, or 0^n after a valid certificate). With honest Bob and
    dishonest Eve it also simulates Bob and always uses M' = 0^n. With both
    honest the simulator is the identity and the real protocol is run.
    """
    _check_case(case)
    if case == "none":
        return real_system(case, params, m, d, bob, eve, device, master_seed, trial_index, u1_override)
    ideal = IdealEcd(case, params.n)
    sim_bob = HonestBob() if "bob" not in case or bob is None else bob

    def reveal_message(d_sim, f_sim):
        # the simulated run reaches the reveal only when its test passed
        ideal.abort_inputs(True, True)
        ideal.output_O()
        ideal.input_message(m)
        ideal.input_deletion(d)
        if d == 1 and not ideal.bob_honest:
            ideal.input_flag(bool(f_sim))
        mt = ideal.output_M_tilde()
        return mt if not ideal.bob_honest else np.zeros(params.n, dtype=np.uint8)

    # the simulator learns D from the functionality's output to Bob/Eve
    res = run_protocol(params, np.zeros(params.n, dtype=np.uint8), d, device=device, bob=sim_bob, eve=eve,
                       master_seed=master_seed, trial_index=trial_index, pad_mode="deferred",
                       u1_override=u1_override, reveal_message=reveal_message)
    o = res.outcome
    if not o.O:
        if "bob" in case:
            ideal.abort_inputs(o_b=False, o_e=True)
        else:
            ideal.abort_inputs(o_b=True, o_e=False)
        O = ideal.output_O()
        return _view(case, m, d, O, None, None if "bob" not in case else sim_bob.output(), res.transcript), res
    O, F = ideal.O, ideal.F if d == 1 else None
    if "bob" in case:
        bob_out = o.M_tilde  # the dishonest Bob's own output
    else:
        bob_out = ideal.m.copy() if d == 0 else np.zeros(params.n, dtype=np.uint8)
    return _view(case, m, d, O, F, bob_out, res.transcript), res


# -- distinguishers ----------------------------------------------------------------

class Distinguisher:
    """Chooses inputs and dishonest behaviour, then guesses real (0) or ideal (1)."""

    name = "base"

    def __init__(self, d: int | None = None):
        self.fixed_d = d

    def choose_inputs(self, params, rng):
        m = random_bits(rng, params.n)
        d = int(rng.integers(0, 2)) if self.fixed_d is None else self.fixed_d
        return m, d

    def bob_role(self):
        return HonestBob()

    def eve_role(self):
        return EveRole()

    def guess(self, view: View, rng) -> int:
        raise NotImplementedError


class ConstantDistinguisher(Distinguisher):
    name = "constant"

    def guess(self, view, rng):
        return 0


class AbortWatcher(Distinguisher):
    name = "abort-watcher"

    def guess(self, view, rng):
        return 0 if view.O else 1


class MTildeChecker(Distinguisher):
    """Guesses 0 exactly when Bob ends up with the message."""

    name = "m-tilde-checker"

    def guess(self, view, rng):
        ok = view.bob_output is not None and np.array_equal(view.bob_output, view.m)
        return 0 if ok else 1


class FlagCorrelator(Distinguisher):
    """Correlates the deletion flag with the first message bit."""

    name = "flag-correlator"

    def guess(self, view, rng):
        f = 1 if view.F else 0
        return int(f ^ int(view.m[0]))


class TranscriptHasher(Distinguisher):
    """Outputs the first bit of a hash of every released register."""

    name = "transcript-hasher"

    def guess(self, view, rng):
        blob = repr((view.O, view.F, view.released(), None if view.bob_output is None else bits_to_hex(view.bob_output)))
        return hashlib.sha256(blob.encode()).digest()[0] & 1


DISTINGUISHERS = {
    cls.name: cls for cls in (ConstantDistinguisher, AbortWatcher, MTildeChecker, FlagCorrelator, TranscriptHasher)
}


@dataclass
class AdvantageReport:
    distinguisher_name: str
    case: str
    trials: int
    p_real: float
    p_ideal: float
    advantage: float
    ci_halfwidth: float

    CSV_COLUMNS = ("distinguisher_name", "case", "trials", "p_real", "p_ideal", "advantage", "ci_halfwidth")

    def row(self) -> list:
        return [getattr(self, c) for c in self.CSV_COLUMNS]


def _one(case, params, dist, system, seed, trial, device_factory):
    rng = substream(seed, trial, "distinguisher")
    m, d = dist.choose_inputs(params, rng)
    view, _ = system(case, params, m, d, bob=dist.bob_role(), eve=dist.eve_role(),
                     device=None if device_factory is None else device_factory(),
                     master_seed=seed, trial_index=trial)
    return int(dist.guess(view, rng) == 0)


IDEAL_TRIAL_OFFSET = 1 << 40


def estimate_advantage(case, params: ProtocolParams, distinguisher: Distinguisher, trials: int,
                       master_seed: int = 0, threads: int = 1, device_factory=None) -> AdvantageReport:
    """Monte-Carlo |P_real(G=0) - P_ideal(G=0)| with a 99% Hoeffding half-width per side (summed)."""
    _check_case(case)
    jobs = [(real_system, i) for i in range(trials)] + [(ideal_system, IDEAL_TRIAL_OFFSET + i) for i in range(trials)]

    def run(job):
        system, trial = job
        return _one(case, params, distinguisher, system, master_seed, trial, device_factory)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(run, jobs))
    else:
        res = [run(j) for j in jobs]
    real = Estimate.from_counts(sum(res[:trials]), trials)
    ideal = Estimate.from_counts(sum(res[trials:]), trials)
    return AdvantageReport(distinguisher.name, case, trials, real.value, ideal.value,
                           abs(real.value - ideal.value), 2 * hoeffding_halfwidth(trials))


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AdvantageReport.CSV_COLUMNS)
    for r in reports:
        w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in r.row()])
    return buf.getvalue()


# -- exact small-register comparison ------------------------------------------------

def exhaustive_pad_comparison(params: ProtocolParams, m, d: int, seeds, case: str = "bob+eve", bob_factory=HonestBob,
                              device_factory=None) -> dict:
    """Compare released-view multisets of the real and simulated systems exactly.

    For each seed, every value of the n-bit pad string is enumerated in both
    systems with all other randomness held fixed. With D=0 the full views are
    compared; with D=1 only registers released before the reveal, since after
    it the two systems differ by design.
    """
    n = params.n
    seeds = list(seeds)
    if n > 12:
        raise UsageError("exhaustive enumeration needs n <= 12")
    pads = [np.array([(v >> j) & 1 for j in range(n)], dtype=np.uint8) for v in range(1 << n)]
    before = None if d == 0 else "t5'"
    mismatched = []
    for seed in seeds:
        real, ideal = Counter(), Counter()
        for u in pads:
            dev = None if device_factory is None else device_factory()
            rv, _ = real_system(case, params, m, d, bob=bob_factory(), device=dev, master_seed=seed, u1_override=u)
            dev = None if device_factory is None else device_factory()
            iv, _ = ideal_system(case, params, m, d, bob=bob_factory(), device=dev, master_seed=seed, u1_override=u)
            real[(rv.O, rv.F, rv.released(before))] += 1
            ideal[(iv.O, iv.F, iv.released(before))] += 1
        if real != ideal:
            mismatched.append(seed)
    return {"seeds": len(seeds), "mismatched": mismatched, "equal": not mismatched}
