"""Box models for the magic square game.

The honest boxes realize the Mermin-Peres strategy on two EPR pairs. Qubits
are ordered (A1, A2, B1, B2) with EPR pairs A1-B1 and A2-B2. Observable
outcome +1 maps to bit 0 and -1 to bit 1.

All devices share one interface (:class:`BoxDevice`): ``prepare`` fabricates
``l`` boxes, then Alice and Bob query them by index. Bob may query a box a
second time through ``bob_second_round``; honest Bob only does this on boxes
he has not measured yet.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import qsim
from .errors import UsageError
from .games import EVEN_ANSWERS, ODD_ANSWERS, optimal_classical_pair
from .stats import total_variation

ALICE_QUBITS = (0, 1)
BOB_QUBITS = (2, 3)

# Mermin-Peres square. The signs on the first two entries of the last row
# make every row multiply to +I and every column to -I.
GRID_LABELS = (
    ((1, "XI"), (1, "IX"), (1, "XX")),
    ((1, "IZ"), (1, "ZI"), (1, "ZZ")),
    ((-1, "XZ"), (-1, "ZX"), (1, "YY")),
)


def grid_observable(row: int, col: int) -> qsim.PmObservable:
    sign, label = GRID_LABELS[row][col]
    return qsim.pauli_observable(label, sign)


@lru_cache(maxsize=None)
def _banks():
    alice = tuple(
        tuple(qsim.embed_observable(grid_observable(x, j), ALICE_QUBITS, 4) for j in range(3)) for x in range(3)
    )
    # All grid entries equal their transposes, so Bob measures the same
    # observables on his halves of the EPR pairs.
    bob = tuple(
        tuple(qsim.embed_observable(grid_observable(i, y), BOB_QUBITS, 4) for i in range(3)) for y in range(3)
    )
    return alice, bob


@lru_cache(maxsize=None)
def two_epr_state() -> qsim.DensityOperator:
    v = np.zeros(16, dtype=complex)
    for i in (0, 1):
        for j in (0, 1):
            v[(i << 3) | (j << 2) | (i << 1) | j] = 0.5
    return qsim.StateVector(v).to_density()


def to_bit(outcome: int) -> int:
    return 0 if outcome == 1 else 1


def encode(bits) -> np.ndarray:
    """3-bit arrays (..., 3) to integer codes a[0] + 2 a[1] + 4 a[2]."""
    b = np.asarray(bits, dtype=np.int64)
    return b[..., 0] + 2 * b[..., 1] + 4 * b[..., 2]


CODE_BITS = np.array([[(c >> j) & 1 for j in range(3)] for c in range(8)], dtype=np.uint8)


def enumerate_branches(state: qsim.DensityOperator, observables):
    """All outcome sequences of measuring ``observables`` in order.

    Returns a list of ``(probability, outcomes, post_state)`` for every branch
    with probability above the floor.
    """
    branches = [(1.0, (), state)]
    for obs in observables:
        nxt = []
        for p, outs, st in branches:
            for o in (1, -1):
                q, post = qsim.branch(st, obs, o)
                if post is not None:
                    nxt.append((p * q, outs + (o,), post))
        branches = nxt
    return branches


class BoxPair:
    """One magic square instance: a shared 4-qubit state and two observable banks."""

    def __init__(self, shared_state: qsim.DensityOperator | None = None):
        self.state = two_epr_state() if shared_state is None else shared_state
        self.alice_bank, self.bob_bank = _banks()
        self.alice_done = False
        self.bob_done = False
        self.bob_rounds = 0

    def _measure(self, bank, rng):
        bits = []
        for obs in bank:
            o, self.state = qsim.measure_observable(self.state, obs, rng)
            bits.append(to_bit(o))
        return np.array(bits, dtype=np.uint8)

    def query_alice(self, x: int, rng) -> np.ndarray:
        if self.alice_done:
            raise UsageError("Alice's box was already queried")
        self.alice_done = True
        return self._measure(self.alice_bank[x], rng)

    def query_bob(self, y: int, rng) -> np.ndarray:
        if self.bob_done:
            raise UsageError("Bob's box was already queried in round one")
        self.bob_done = True
        self.bob_rounds = 1
        return self._measure(self.bob_bank[y], rng)

    def second_round(self, yprime: int, rng) -> np.ndarray:
        """Measure column ``yprime`` on the retained state (measured or not)."""
        self.bob_done = True
        self.bob_rounds += 1
        return self._measure(self.bob_bank[yprime], rng)


def ideal_box_pair() -> BoxPair:
    return BoxPair()


def grid_invariant_errors() -> dict:
    """Largest deviations of the grid from its algebraic invariants."""
    eye = np.eye(4)
    ops = [[grid_observable(r, c).matrix for c in range(3)] for r in range(3)]
    rows = max(np.abs(ops[r][0] @ ops[r][1] @ ops[r][2] - eye).max() for r in range(3))
    cols = max(np.abs(ops[0][c] @ ops[1][c] @ ops[2][c] + eye).max() for c in range(3))
    comm = 0.0
    for r in range(3):
        for i in range(3):
            for j in range(3):
                comm = max(comm, qsim.commutator_norm(ops[r][i], ops[r][j]), qsim.commutator_norm(ops[i][r], ops[j][r]))
    return {"row_product": float(rows), "column_product": float(cols), "commutator": float(comm)}


@lru_cache(maxsize=None)
def ideal_joint_table(bob_first: bool = False) -> np.ndarray:
    """Exact P[x, y, a_code, b_code] for the ideal boxes by branch enumeration."""
    alice, bob = _banks()
    table = np.zeros((3, 3, 8, 8))
    for x in range(3):
        for y in range(3):
            order = list(bob[y]) + list(alice[x]) if bob_first else list(alice[x]) + list(bob[y])
            for p, outs, _ in enumerate_branches(two_epr_state(), order):
                bits = [to_bit(o) for o in outs]
                bb, ab = (bits[:3], bits[3:]) if bob_first else (bits[3:], bits[:3])
                table[x, y, int(encode(ab)), int(encode(bb))] += p
    table.setflags(write=False)
    return table


@lru_cache(maxsize=None)
def measure_early_table():
    """Exact P[x, g, y', win] when Bob measures column g, then column y' on the post-state.

    If ``g == y'`` Bob reuses his first result. Alice measures row ``x``.
    """
    alice, bob = _banks()
    win = np.zeros((3, 3, 3))
    for g in range(3):
        for p1, outs1, st1 in enumerate_branches(two_epr_state(), bob[g]):
            b1 = [to_bit(o) for o in outs1]
            for yp in range(3):
                if yp == g:
                    second = [(1.0, b1, st1)]
                else:
                    second = [(p2, [to_bit(o) for o in o2], st2) for p2, o2, st2 in enumerate_branches(st1, bob[yp])]
                for p2, b2, st2 in second:
                    for x in range(3):
                        for p3, outs3, _ in enumerate_branches(st2, alice[x]):
                            a = [to_bit(o) for o in outs3]
                            if a[yp] == b2[x]:
                                win[x, g, yp] += p1 * p2 * p3
    win.setflags(write=False)
    return win


def measure_early_acceptance(yprime_given_guess: str = "uniform") -> float:
    """Per-round acceptance of the measure-early attack with a uniform guess and challenge.

    Inputs: x uniform; Bob's guessed column g uniform; challenge y' uniform
    (the marginal of y' when y is uniform and y' != y).
    """
    return float(measure_early_table().mean())


# -- device interface -----------------------------------------------------------

class BoxDevice:
    """Base class for devices supplied by Eve.

    ``honest_bob_order_independent`` declares that Bob's answers do not depend
    on the order in which his boxes are queried.
    """

    honest_bob_order_independent = True

    def prepare(self, l: int, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def alice_query(self, idx, x) -> np.ndarray:
        raise NotImplementedError

    def bob_query(self, idx, y) -> np.ndarray:
        raise NotImplementedError

    def bob_second_round(self, idx, yprime) -> np.ndarray:
        raise NotImplementedError

    def eve_side_information(self):
        return None


def _sample_rows(cdf: np.ndarray, rng) -> np.ndarray:
    u = rng.random(cdf.shape[0])
    return np.minimum((cdf < u[:, None]).sum(axis=1), cdf.shape[1] - 1)


class NoisyBoxArray(BoxDevice):
    """``l`` independent boxes that each win MS with probability exactly 1 - eps/2.

    Joint outputs are drawn from the exact ideal distribution; with
    probability eps/2 a box then flips the second-measured party's bit at the
    checked position plus one other bit of that party's answer, which keeps
    both parities and makes the instance lose. The resulting joint law does
    not depend on which side is queried first.
    """

    def __init__(self, eps: float = 0.0):
        if not 0.0 <= eps < 1.0:
            raise UsageError("eps must lie in [0, 1)")
        self.eps = float(eps)
        self.l = 0

    def prepare(self, l: int, rng: np.random.Generator) -> None:
        self.l = int(l)
        self.rng = rng
        self.noisy = rng.random(self.l) < self.eps / 2
        self.other = rng.integers(1, 3, size=self.l)
        self.x = np.full(self.l, -1)
        self.y = np.full(self.l, -1)
        self.a = np.zeros(self.l, dtype=np.int64)
        self.b = np.zeros(self.l, dtype=np.int64)
        t = ideal_joint_table()
        self._pa = t.sum(axis=3)[:, 0, :]  # Alice's marginal does not depend on y
        self._pb = t.sum(axis=2)[0, :, :]

    def _check(self, idx, inputs, seen):
        idx = np.atleast_1d(np.asarray(idx, dtype=np.intp))
        inputs = np.broadcast_to(np.asarray(inputs, dtype=np.intp), idx.shape)
        if np.any(seen[idx] >= 0):
            raise UsageError("box side queried twice")
        if len(np.unique(idx)) != len(idx):
            raise UsageError("duplicate box indices in one query")
        if np.any((inputs < 0) | (inputs > 2)):
            raise UsageError("inputs must be trits")
        return idx, inputs

    def alice_query(self, idx, x) -> np.ndarray:
        idx, x = self._check(idx, x, self.x)
        t = ideal_joint_table()
        other = self.y[idx]
        first = other < 0
        codes = np.empty(len(idx), dtype=np.int64)
        if first.any():
            codes[first] = _sample_rows(np.cumsum(self._pa[x[first]], axis=1), self.rng)
        if (~first).any():
            j = ~first
            xs, ys, bs = x[j], other[j], self.b[idx[j]]
            cond = t[xs, ys, :, bs]
            cond = cond / cond.sum(axis=1, keepdims=True)
            c = _sample_rows(np.cumsum(cond, axis=1), self.rng)
            bits = CODE_BITS[c].copy()
            bad = self.noisy[idx[j]]
            if bad.any():
                r = np.flatnonzero(bad)
                bits[r, ys[r]] ^= 1
                bits[r, (ys[r] + self.other[idx[j]][r]) % 3] ^= 1
            codes[j] = encode(bits)
        self.x[idx] = x
        self.a[idx] = codes
        return CODE_BITS[codes].copy()

    def bob_query(self, idx, y) -> np.ndarray:
        idx, y = self._check(idx, y, self.y)
        t = ideal_joint_table()
        other = self.x[idx]
        first = other < 0
        codes = np.empty(len(idx), dtype=np.int64)
        if first.any():
            codes[first] = _sample_rows(np.cumsum(self._pb[y[first]], axis=1), self.rng)
        if (~first).any():
            j = ~first
            xs, ys, as_ = other[j], y[j], self.a[idx[j]]
            cond = t[xs, ys, as_, :]
            cond = cond / cond.sum(axis=1, keepdims=True)
            c = _sample_rows(np.cumsum(cond, axis=1), self.rng)
            bits = CODE_BITS[c].copy()
            bad = self.noisy[idx[j]]
            if bad.any():
                r = np.flatnonzero(bad)
                bits[r, xs[r]] ^= 1
                bits[r, (xs[r] + self.other[idx[j]][r]) % 3] ^= 1
            codes[j] = encode(bits)
        self.y[idx] = y
        self.b[idx] = codes
        return CODE_BITS[codes].copy()

    def bob_second_round(self, idx, yprime) -> np.ndarray:
        """Challenge unmeasured boxes with y'.

        The classical model keeps no post-measurement state, so boxes Bob
        already measured cannot be challenged again; use
        :class:`QuantumBoxArray` for such attacks.
        """
        return self.bob_query(idx, yprime)


def noisy_boxes(l: int, eps: float, rng: np.random.Generator) -> NoisyBoxArray:
    dev = NoisyBoxArray(eps)
    dev.prepare(l, rng)
    return dev


class QuantumBoxArray(BoxDevice):
    """``l`` ideal boxes simulated as separate 4-qubit density matrices.

    Keeps post-measurement states, so Bob can measure a box early and be
    challenged on it again.
    """

    def prepare(self, l: int, rng: np.random.Generator) -> None:
        self.l = int(l)
        self.rng = rng
        self.boxes = [BoxPair() for _ in range(self.l)]

    def alice_query(self, idx, x) -> np.ndarray:
        idx = np.atleast_1d(idx)
        x = np.broadcast_to(np.asarray(x), idx.shape)
        return np.array([self.boxes[i].query_alice(int(xi), self.rng) for i, xi in zip(idx, x)], dtype=np.uint8).reshape(-1, 3)

    def bob_query(self, idx, y) -> np.ndarray:
        idx = np.atleast_1d(idx)
        y = np.broadcast_to(np.asarray(y), idx.shape)
        return np.array([self.boxes[i].query_bob(int(yi), self.rng) for i, yi in zip(idx, y)], dtype=np.uint8).reshape(-1, 3)

    def bob_second_round(self, idx, yprime) -> np.ndarray:
        idx = np.atleast_1d(idx)
        yprime = np.broadcast_to(np.asarray(yprime), idx.shape)
        return np.array([self.boxes[i].second_round(int(yi), self.rng) for i, yi in zip(idx, yprime)], dtype=np.uint8).reshape(-1, 3)


class ClassicalColludingDevice(BoxDevice):
    """Deterministic boxes playing an optimal classical strategy (value 8/9).

    Eve built the boxes, so her side information is the full answer tables.
    Bob's answers at a column never change, so re-querying is allowed.
    """

    def prepare(self, l: int, rng: np.random.Generator) -> None:
        self.l = int(l)
        self.alice_table, self.bob_table = optimal_classical_pair()

    def alice_query(self, idx, x) -> np.ndarray:
        idx = np.atleast_1d(idx)
        return self.alice_table[np.broadcast_to(np.asarray(x), idx.shape)].copy()

    def bob_query(self, idx, y) -> np.ndarray:
        idx = np.atleast_1d(idx)
        return self.bob_table[np.broadcast_to(np.asarray(y), idx.shape)].copy()

    bob_second_round = bob_query

    def eve_side_information(self):
        return {"alice_table": self.alice_table.copy(), "bob_table": self.bob_table.copy()}


class LeakyDevice(BoxDevice):
    """Honest boxes except that Bob's box 1 reveals box 0's input when queried after it.

    Violates no-signalling between Bob's boxes; used to validate the checker.
    """

    honest_bob_order_independent = False

    def __init__(self):
        self.inner = NoisyBoxArray(0.0)

    def prepare(self, l: int, rng: np.random.Generator) -> None:
        if l < 2:
            raise UsageError("the leaky device needs at least two boxes")
        self.inner.prepare(l, rng)
        self.seen0 = None

    def alice_query(self, idx, x):
        return self.inner.alice_query(idx, x)

    def bob_query(self, idx, y):
        idx = np.atleast_1d(idx)
        y = np.broadcast_to(np.asarray(y), idx.shape)
        out = self.inner.bob_query(idx, y)
        for k, i in enumerate(idx):
            if i == 0:
                self.seen0 = int(y[k])
            elif i == 1 and self.seen0 is not None:
                out[k] = ODD_ANSWERS[self.seen0]
        return out

    bob_second_round = bob_query


# -- no-signalling checker -------------------------------------------------------

MIN_NS_SAMPLES = 1000
NS_THRESHOLD = 0.02


def sample_bob_behavior(device_factory, l: int, order, n_samples: int, rng) -> tuple:
    """Query Bob's boxes one at a time in ``order`` with uniform inputs.

    Returns ``(inputs, outputs)`` arrays of shape (n_samples, l) with outputs
    as integer codes.
    """
    inputs = np.zeros((n_samples, l), dtype=np.int64)
    outputs = np.zeros((n_samples, l), dtype=np.int64)
    for s in range(n_samples):
        dev = device_factory()
        dev.prepare(l, rng)
        ys = rng.integers(0, 3, size=l)
        for i in order:
            outputs[s, i] = int(encode(dev.bob_query([i], ys[i])[0]))
        inputs[s] = ys
    return inputs, outputs


def no_signalling_check(behavior_a, behavior_b, threshold: float = NS_THRESHOLD, min_samples: int = MIN_NS_SAMPLES) -> dict:
    """Compare per-box output marginals (given that box's own input) across two behaviors.

    Each behavior is ``(inputs, outputs)`` with shape (samples, l). Returns a
    dict with ``passed`` and ``max_deviation`` (largest total variation).
    """
    (ia, oa), (ib, ob) = behavior_a, behavior_b
    ia, oa, ib, ob = (np.asarray(v) for v in (ia, oa, ib, ob))
    if min(len(ia), len(ib)) < min_samples:
        raise UsageError(f"need at least {min_samples} samples per behavior")
    if ia.shape != oa.shape or ib.shape[1:] != ia.shape[1:] or ib.shape != ob.shape:
        raise UsageError("behaviors must have matching shapes")
    worst = 0.0
    for i in range(ia.shape[1]):
        for v in np.union1d(np.unique(ia[:, i]), np.unique(ib[:, i])):
            sa = oa[ia[:, i] == v, i]
            sb = ob[ib[:, i] == v, i]
            if len(sa) == 0 or len(sb) == 0:
                raise UsageError(f"input {v} of box {i} missing from one behavior")
            pa = np.bincount(sa, minlength=8) / len(sa)
            pb = np.bincount(sb, minlength=8) / len(sb)
            worst = max(worst, total_variation(pa, pb))
    return {"passed": bool(worst <= threshold), "max_deviation": float(worst), "threshold": threshold}
