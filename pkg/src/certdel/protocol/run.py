"""One execution of the certified-deletion encryption protocol.

Alice is always honest and is implemented here; Bob and Eve are pluggable
roles. Randomness comes from per-party substreams of one master seed:
``source`` for the temporarily private source (revealed at t5'), ``private``
for Alice's inputs to boxes outside S, ``device`` for the boxes, ``bob`` and
``eve`` for the roles, and ``public`` for the syndrome codes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..crypto import (
    SyndromeCode,
    ToeplitzHash,
    bits_to_hex,
    hash_apply,
    otp_xor,
    pad_key,
    random_bits,
    syndrome_of,
)
from ..devices import NoisyBoxArray
from ..errors import UsageError
from ..games import ms_wins
from ..rng import Streams, substream
from .params import ProtocolParams
from .roles import EveRole, HonestBob
from .transcript import Channel, Event, Transcript

PAD_MODES = ("direct", "swapped", "deferred")


@lru_cache(maxsize=256)
def public_code(code_seed: int, length: int, r: int, radius: int) -> SyndromeCode:
    """Public parity-check matrix for keys of ``length`` bits."""
    return SyndromeCode.random(length, r, radius, substream(code_seed, length, "public"))


def code_for(params: ProtocolParams, key_len: int) -> SyndromeCode:
    r = min(params.syndrome_bits, key_len)
    radius = int(math.floor(2 * params.eps * key_len + 1e-12))
    if key_len and 2 * radius >= key_len:
        raise UsageError("decode radius 2 eps |S| must stay below |S| / 2; use eps < 1/4")
    return public_code(params.code_seed, key_len, r, radius)


@dataclass
class SourceDraws:
    """Everything the temporarily private source supplies."""

    S: np.ndarray
    T: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yprime: np.ndarray
    hash: ToeplitzHash
    u1: np.ndarray
    u2: np.ndarray

    def reveal(self, with_keys: bool, code=None, u1=None) -> dict:
        out = {
            "S": self.S.copy(),
            "T": self.T.copy(),
            "x": np.where(self.S, self.x, -1),
            "y": np.where(self.S, self.y, -1),
            "yprime": self.yprime.copy(),
        }
        if with_keys:
            out.update(hash=self.hash, u1=self.u1 if u1 is None else u1, u2=self.u2, code=code)
        return out


def draw_source(params: ProtocolParams, rng: np.random.Generator) -> SourceDraws:
    l = params.l
    S = rng.random(l) >= params.alpha
    t = params.test_size
    pool = np.flatnonzero(S) if S.sum() > params.gamma_l else np.arange(l)
    T = np.sort(rng.permutation(pool)[:t])
    x = rng.integers(0, 3, size=l)
    y = rng.integers(0, 3, size=l)
    yprime = (y + rng.integers(1, 3, size=l)) % 3
    yprime[T] = -1
    h = ToeplitzHash.random(l + 1, params.n, rng)
    u1 = random_bits(rng, params.n)
    u2 = random_bits(rng, min(params.syndrome_bits, int(S.sum())))
    return SourceDraws(S, T, x, y, yprime, h, u1, u2)


@dataclass
class Outcome:
    """Result of one run. ``F`` is None unless O is true and D = 1."""

    O: bool
    F: bool | None
    M_tilde: np.ndarray | None
    match_counts: dict
    decode_report: dict | None
    seed: int
    trial: int
    K_A: np.ndarray | None = None
    K_B: np.ndarray | None = None
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "O": "T" if self.O else "F",
            "F": None if self.F is None else ("ok" if self.F else "fail"),
            "M_tilde_hex": None if self.M_tilde is None else bits_to_hex(self.M_tilde),
            "M_tilde_bit_len": None if self.M_tilde is None else int(len(self.M_tilde)),
            "match_counts": self.match_counts,
            "decode_report": self.decode_report,
            "flags": self.flags,
            "seed": self.seed,
            "trial": self.trial,
        }


@dataclass
class RunResult:
    outcome: Outcome
    transcript: Transcript
    source: SourceDraws
    c1: np.ndarray | None = None
    c2: np.ndarray | None = None
    released_u1: np.ndarray | None = None


def alice_test_phase1(params: ProtocolParams, a_T, b_T, x_T, y_T, s_size: int):
    """Return (passed, matches, threshold)."""
    t = len(x_T)
    matches = int(ms_wins(x_T, y_T, a_T, b_T).sum()) if t else 0
    threshold = params.test_threshold(t)
    passed = s_size > params.gamma_l and matches >= threshold
    return passed, matches, threshold


def alice_deletion_test(params: ProtocolParams, a, bprime, x, yprime):
    """Return (passed, matches, threshold); an empty set passes."""
    k = len(x)
    matches = int(ms_wins(x, yprime, a, bprime).sum()) if k else 0
    threshold = params.deletion_threshold(k)
    return matches >= threshold, matches, threshold


def _answers(b, k):
    b = np.asarray(b, dtype=np.uint8)
    if b.shape != (k, 3):
        # a malformed reply becomes even-parity strings, which always lose
        return np.zeros((k, 3), dtype=np.uint8)
    return b


def run_protocol(
    params: ProtocolParams,
    m,
    d: int,
    device=None,
    bob=None,
    eve=None,
    master_seed: int = 0,
    trial_index: int = 0,
    pad_mode: str = "direct",
    u1_override=None,
    reveal_message=None,
) -> RunResult:
    """Execute the protocol once.

    ``pad_mode`` selects how the ciphertext pad is produced: ``"direct"``
    draws U1 and sets C1 = M xor h(K) xor U1; ``"swapped"`` draws C1 and sets
    U1 = M xor h(K) xor C1 (equal in distribution); ``"deferred"`` is the
    simulator's dummy-ciphertext mode, where C1 is drawn without looking at M
    and U1 = M' xor h(K) xor C1 is fixed at reveal time with
    ``M' = reveal_message(D, F)``. ``u1_override`` replaces the drawn pad
    string (U1, or C1 in the other modes).
    """
    if pad_mode not in PAD_MODES:
        raise UsageError(f"pad_mode must be one of {PAD_MODES}")
    if pad_mode == "deferred" and reveal_message is None:
        raise UsageError("deferred pad mode needs reveal_message")
    m = np.asarray(m, dtype=np.uint8)
    if m.shape != (params.n,):
        raise UsageError(f"message must have {params.n} bits")
    if d not in (0, 1):
        raise UsageError("d must be 0 or 1")
    streams = Streams(master_seed, trial_index)
    device = NoisyBoxArray(params.eps) if device is None else device
    bob = HonestBob() if bob is None else bob
    eve = EveRole() if eve is None else eve
    l = params.l

    tr = Transcript()
    tr.parameters = params.to_dict()
    ch = Channel(tr, eve)
    device.prepare(l, streams["device"])
    bob.start(params, device, streams["bob"])
    eve.start(params, device, streams["eve"])

    # Phase 1 -----------------------------------------------------------------
    src = draw_source(params, streams["source"])
    S, T = src.S, src.T
    if u1_override is not None:
        src.u1 = np.asarray(u1_override, dtype=np.uint8).copy()
    x_in = np.where(S, src.x, streams["private"].integers(0, 3, size=l))
    a = device.alice_query(np.arange(l), x_in)
    tmask = np.zeros(l, dtype=bool)
    tmask[T] = True
    y_T = src.y[T]
    send_yp_early = params.yprime_step == 5
    fields = dict(T=("mask", tmask), y_T=("trits", y_T))
    if send_yp_early:
        fields["yprime"] = ("trits", src.yprime[~tmask])
    ch.send("t1'", "Alice", "Bob", "test request", eve_tag="t1''", **fields)
    b_T = _answers(bob.on_test(T, y_T, src.yprime if send_yp_early else None), len(T))
    ch.send("t1'", "Bob", "Alice", "test answers", eve_tag="t1''", b_T=("bits", b_T))

    s_size = int(S.sum())
    ok, matches, threshold = alice_test_phase1(params, a[T], b_T, x_in[T], y_T, s_size)
    tr.record(Event("t1", "Alice", "local", "abort test", {"passed": ("flag", ok)}))
    ch.send("t1", "Alice", "Bob", "abort decision", ok=("flag", ok))
    bob.on_abort_decision(ok)
    tr.record(Event("t1", "Alice", "env", "output O", {"O": ("flag", ok)}))
    counts = {"test": {"matches": matches, "size": len(T), "threshold": threshold, "S_size": s_size}}
    flags = {"T_fallback": bool(s_size <= params.gamma_l)}

    if not ok:
        tr.record(Event("t5'", "R", "all", "reveal", _reveal_fields(src, False)))
        bob.on_reveal(src.reveal(False))
        out = Outcome(False, None, None, counts, None, master_seed, trial_index, flags=flags)
        return RunResult(out, tr, src)

    sidx = np.flatnonzero(S)
    key_a = a[sidx, src.y[sidx]].astype(np.uint8)
    code = code_for(params, s_size)
    hk = hash_apply(src.hash, pad_key(key_a, l))
    syn = syndrome_of(code, key_a)
    tr.record(Event("t2", "env", "Alice", "input M", {"M": ("bits", m)}))
    c2 = otp_xor(syn, src.u2)
    u2_rel = src.u2
    if pad_mode == "direct":
        c1 = otp_xor(otp_xor(m, hk), src.u1)
        u1_rel = src.u1
    else:
        # the drawn string serves as C1; the pad U1 follows from it
        c1 = src.u1.copy()
        u1_rel = otp_xor(otp_xor(m, hk), c1) if pad_mode == "swapped" else None
    ch.send("t2", "Alice", "Bob", "ciphertext", C1=("bits", c1), C2=("bits", c2))
    bob.on_ciphertext(c1, c2)

    # Phase 2 -----------------------------------------------------------------
    tr.record(Event("t3", "env", "Alice", "input D", {"D": ("flag", d)}))
    F = None
    if d == 0:
        ch.send("t3", "Alice", "Bob", "deletion decision", D=("flag", 0))
        tr.record(Event("t3_dot", "Bob", "env", "output D", {"D": ("flag", 0)}))
        bob.on_deletion_request(0)
    else:
        Tbar = np.flatnonzero(~tmask)
        fields = {"D": ("flag", 1)}
        if not send_yp_early:
            fields["yprime"] = ("trits", src.yprime[Tbar])
        ch.send("t3", "Alice", "Bob", "deletion request", **fields)
        tr.record(Event("t3_dot", "Bob", "env", "output D", {"D": ("flag", 1)}))
        bprime = _answers(bob.on_deletion_request(1, None if send_yp_early else src.yprime), len(Tbar))
        ch.send("t4'", "Bob", "Alice", "deletion certificate", bprime=("bits", bprime))
        check = np.flatnonzero(S[Tbar])  # positions of S \ T inside T̄
        ci = Tbar[check]
        F, dm, dt = alice_deletion_test(params, a[ci], bprime[check], src.x[ci], src.yprime[ci])
        counts["deletion"] = {"matches": dm, "size": int(len(ci)), "threshold": dt}
        flags["empty_deletion_set"] = bool(len(ci) == 0)
        tr.record(Event("t4", "Alice", "env", "output F", {"F": ("flag", F)}))

    # Phase 3 -----------------------------------------------------------------
    if pad_mode == "deferred":
        u1_rel = otp_xor(otp_xor(np.asarray(reveal_message(d, F), dtype=np.uint8), hk), c1)
    reveal = src.reveal(True, code=code, u1=u1_rel)
    reveal["u2"] = u2_rel
    tr.record(Event("t5'", "R", "all", "reveal", _reveal_fields(src, True, u1_rel, u2_rel)))
    bob.on_reveal(reveal)
    m_tilde = bob.output()
    if m_tilde is not None:
        m_tilde = np.asarray(m_tilde, dtype=np.uint8)
        tr.record(Event("t5", "Bob", "env", "output M", {"M": ("bits", m_tilde)}))
    out = Outcome(True, F, m_tilde, counts, bob.decode_report, master_seed, trial_index, key_a, getattr(bob, "key_b", None), flags)
    return RunResult(out, tr, src, c1, c2, u1_rel)


def _reveal_fields(src: SourceDraws, with_keys: bool, u1=None, u2=None) -> dict:
    S = src.S
    f = {
        "S": ("mask", S),
        "T": ("mask", np.isin(np.arange(len(S)), src.T)),
        "x_S": ("trits", src.x[S]),
        "y_S": ("trits", src.y[S]),
        "yprime": ("trits", src.yprime[src.yprime >= 0]),
    }
    if with_keys:
        f.update(h=("bits", src.hash.seed), u1=("bits", u1), u2=("bits", u2))
    return f
