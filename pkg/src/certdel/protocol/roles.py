"""Bob and Eve behaviours.

A Bob role reacts to what Alice sends over the channel and to the public
reveal, and can query his boxes through the device. Honest Bob follows the
protocol; the other roles deviate in the ways the attack suite and the
distinguishers need. All roles draw randomness only from the ``bob`` stream.
"""

from __future__ import annotations

import numpy as np

from ..crypto import decode, hash_apply, otp_xor, pad_key
from ..errors import ProtocolOrderError
from ..games import ODD_ANSWERS


class BobRole:
    """Interface; the default implementations do nothing."""

    honest = False

    def start(self, params, device, rng):
        self.params = params
        self.device = device
        self.rng = rng
        self.decode_report = None
        self.stage = "start"

    def _advance(self, expected, new):
        if self.stage not in expected:
            raise ProtocolOrderError(f"Bob received {new} while in stage {self.stage}")
        self.stage = new

    def on_test(self, T, y_T, yprime=None):
        """Return answers for the test boxes ``T``; ``yprime`` is set when y' is sent early."""
        raise NotImplementedError

    def on_abort_decision(self, ok: bool):
        self._advance(("test",), "decided")
        self.ok = ok

    def on_ciphertext(self, c1, c2):
        self._advance(("decided",), "cipher")
        self.c1, self.c2 = c1, c2

    def on_deletion_request(self, d: int, yprime=None):
        """Return answers for the boxes outside ``T`` when ``d == 1``."""
        self._advance(("cipher",), "deletion")
        self.d = d
        return None

    def on_reveal(self, reveal: dict):
        self.reveal = reveal

    def output(self):
        """Bob's final message (None if he has none)."""
        return None

    # helpers -----------------------------------------------------------------
    def random_odd(self, k: int) -> np.ndarray:
        return ODD_ANSWERS[self.rng.integers(0, 4, size=k)].copy()

    def decrypt(self, key_b: np.ndarray) -> np.ndarray:
        """Reconcile ``key_b`` against the revealed syndrome and unmask C1."""
        r = self.reveal
        syn = otp_xor(self.c2, r["u2"])
        res = decode(r["code"], key_b, syn, cap=self.params.decoder_cap, fallback="truncate")
        self.decode_report = res.to_dict()
        guess = key_b if res.key is None else res.key
        return otp_xor(otp_xor(self.c1, hash_apply(r["hash"], pad_key(guess, self.params.l))), r["u1"])


class HonestBob(BobRole):
    """Follows the protocol.

    ``phase3_order`` picks how the remaining boxes are queried when D=0:
    ``"split"`` queries S∩T̄ then S̄ in two calls, ``"together"`` queries all
    of them in one call, ``"reversed"`` queries S̄ first.
    """

    honest = True

    def __init__(self, phase3_order: str = "split"):
        if phase3_order not in ("split", "together", "reversed"):
            raise ValueError("phase3_order must be split, together or reversed")
        self.phase3_order = phase3_order

    def on_test(self, T, y_T, yprime=None):
        self._advance(("start",), "test")
        self.T = np.asarray(T)
        self.b = {}
        b_T = self.device.bob_query(self.T, y_T)
        for i, row in zip(self.T, b_T):
            self.b[int(i)] = row
        self.early_yprime = yprime
        return b_T

    def on_deletion_request(self, d, yprime=None):
        super().on_deletion_request(d, yprime)
        if d == 0:
            return None
        yp = self.early_yprime if yprime is None else yprime
        Tbar = np.setdiff1d(np.arange(self.params.l), self.T)
        self.deleted = True
        return self.device.bob_second_round(Tbar, yp[Tbar])

    def on_reveal(self, reveal):
        super().on_reveal(reveal)
        if not getattr(self, "ok", False) or self.d != 0:
            return
        S = reveal["S"]
        rest = np.setdiff1d(np.flatnonzero(S), self.T)
        outside = np.flatnonzero(~S)
        y_out = self.rng.integers(0, 3, size=outside.size)
        if self.phase3_order == "together":
            idx = np.concatenate([rest, outside])
            order = np.argsort(idx)
            ins = np.concatenate([reveal["y"][rest], y_out])[order]
            out = self.device.bob_query(idx[order], ins)
            for i, row in zip(idx[order], out):
                self.b[int(i)] = row
        else:
            batches = [(rest, reveal["y"][rest]), (outside, y_out)]
            if self.phase3_order == "reversed":
                batches.reverse()
            for idx, ins in batches:
                if idx.size:
                    for i, row in zip(idx, self.device.bob_query(idx, ins)):
                        self.b[int(i)] = row
        sidx = np.flatnonzero(S)
        x = reveal["x"]
        self.key_b = np.array([self.b[int(i)][x[i]] for i in sidx], dtype=np.uint8)
        self.m_tilde = self.decrypt(self.key_b)

    def output(self):
        if not getattr(self, "ok", False):
            return None
        if self.d == 1:
            return np.zeros(self.params.n, dtype=np.uint8)
        return self.m_tilde


class SabotageBob(HonestBob):
    """Answers the test with uniformly random odd-parity strings."""

    honest = False

    def on_test(self, T, y_T, yprime=None):
        self._advance(("start",), "test")
        self.T = np.asarray(T)
        self.b = {}
        return self.random_odd(len(self.T))


class RandomCertificateBob(HonestBob):
    """Sends a random deletion certificate, keeps his boxes, then decrypts as if D=0."""

    honest = False

    def on_deletion_request(self, d, yprime=None):
        BobRole.on_deletion_request(self, d, yprime)
        if d == 0:
            return None
        return self.random_odd(self.params.l - len(self.T))

    def on_reveal(self, reveal):
        if not getattr(self, "ok", False):
            return BobRole.on_reveal(self, reveal)
        d = self.d
        self.d = 0
        try:
            super().on_reveal(reveal)
        finally:
            self.d = d

    def output(self):
        return getattr(self, "m_tilde", None)


class MeasureEarlyBob(HonestBob):
    """Measures every box outside T at a guessed column right after the test.

    On the deletion challenge he reuses the early result when the guess equals
    y', and otherwise measures column y' on the post-measurement state. After
    the reveal he keeps the key bits whose guess was right, guesses the rest
    and decrypts. Needs a device that keeps post-measurement states.
    """

    honest = False

    def on_test(self, T, y_T, yprime=None):
        b_T = super().on_test(T, y_T, yprime)
        l = self.params.l
        self.Tbar = np.setdiff1d(np.arange(l), self.T)
        self.guess = np.full(l, -1)
        self.guess[self.Tbar] = self.rng.integers(0, 3, size=self.Tbar.size)
        self.early = {}
        if self.Tbar.size:
            for i, row in zip(self.Tbar, self.device.bob_query(self.Tbar, self.guess[self.Tbar])):
                self.early[int(i)] = row
        return b_T

    def on_deletion_request(self, d, yprime=None):
        BobRole.on_deletion_request(self, d, yprime)
        if d == 0:
            return None
        yp = self.early_yprime if yprime is None else yprime
        out = np.zeros((self.Tbar.size, 3), dtype=np.uint8)
        for k, i in enumerate(self.Tbar):
            if self.guess[i] == yp[i]:
                out[k] = self.early[int(i)]
            else:
                out[k] = self.device.bob_second_round([i], yp[i])[0]
        return out

    def on_reveal(self, reveal):
        BobRole.on_reveal(self, reveal)
        if not getattr(self, "ok", False):
            return
        S, x, y = reveal["S"], reveal["x"], reveal["y"]
        bits = []
        for i in np.flatnonzero(S):
            if int(i) in self.b:
                bits.append(self.b[int(i)][x[i]])
            elif self.guess[i] == y[i]:
                bits.append(self.early[int(i)][x[i]])
            else:
                bits.append(self.rng.integers(0, 2))
        self.key_b = np.array(bits, dtype=np.uint8)
        self.m_tilde = self.decrypt(self.key_b)

    def output(self):
        return getattr(self, "m_tilde", None)


class ColludingClassicalBob(HonestBob):
    """Plays deterministic boxes built by Eve and decrypts with her answer tables."""

    honest = False

    def on_reveal(self, reveal):
        BobRole.on_reveal(self, reveal)
        if not getattr(self, "ok", False):
            return
        tables = self.device.eve_side_information()
        S, x, y = reveal["S"], reveal["x"], reveal["y"]
        sidx = np.flatnonzero(S)
        self.key_b = tables["alice_table"][x[sidx], y[sidx]].astype(np.uint8)
        self.m_tilde = self.decrypt(self.key_b)

    def output(self):
        return getattr(self, "m_tilde", None)


BOB_ROLES = {
    "honest": HonestBob,
    "sabotage": SabotageBob,
    "random-certificate": RandomCertificateBob,
    "measure-early": MeasureEarlyBob,
    "collude-classical": ColludingClassicalBob,
}


class EveRole:
    """Passive eavesdropper: keeps every tapped message and the public reveal."""

    def __init__(self):
        self.seen = []

    def start(self, params, device, rng):
        self.params = params
        self.device = device
        self.rng = rng
        self.seen = []

    def observe(self, event):
        self.seen.append(event)


PassiveEve = EveRole
