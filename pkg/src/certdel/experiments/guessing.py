"""Guessing probabilities of classical-quantum ensembles.

Classical side information gives the exact value sum_e max_k P(k, e).
Quantum side information (at most two qubits) gives the pretty-good
measurement value as a lower bound and two upper bounds: the sum of the
largest eigenvalues of the weighted states, and the square root of the
pretty-good value. For two labels the Helstrom value is exact and is
reported as well.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ResourceError, UsageError

MAX_SIDE_QUBITS = 2


def classical_guessing(joint) -> float:
    """Sum over side-info values e of max_k P(k, e); ``joint`` has shape (labels, side)."""
    p = np.asarray(joint, dtype=float)
    if p.ndim == 1:
        p = p[:, None]
    if p.ndim != 2 or np.any(p < -1e-12) or abs(p.sum() - 1) > 1e-9:
        raise UsageError("joint distribution must be a non-negative (labels, side) array summing to 1")
    return float(p.max(axis=0).sum())


def classical_guessing_bruteforce(joint) -> float:
    """Maximum over every deterministic guess function side -> label."""
    p = np.asarray(joint, dtype=float)
    k, e = p.shape
    if k**e > 1 << 16:
        raise ResourceError("too many guessing functions to enumerate")
    best = 0.0
    cols = np.arange(e)
    for g in itertools.product(range(k), repeat=e):
        best = max(best, float(p[list(g), cols].sum()))
    return best


def _psd_power(m, power):
    w, v = np.linalg.eigh(m)
    w = np.where(w > 1e-12, w, 0.0)
    with np.errstate(divide="ignore"):
        wp = np.where(w > 0, w**power, 0.0)
    return (v * wp) @ v.conj().T


def _weighted_states(probs, states):
    probs = np.asarray(probs, dtype=float)
    mats = [np.asarray(getattr(s, "matrix", s), dtype=complex) for s in states]
    if len(mats) != probs.size or probs.size == 0:
        raise UsageError("need one state per label")
    if np.any(probs < -1e-12) or abs(probs.sum() - 1) > 1e-9:
        raise UsageError("label probabilities must be non-negative and sum to 1")
    d = mats[0].shape[0]
    if d > 1 << MAX_SIDE_QUBITS:
        raise ResourceError(f"quantum side information is limited to {MAX_SIDE_QUBITS} qubits")
    for m in mats:
        if m.ndim == 1:
            raise UsageError("pass density matrices, not state vectors")
        if m.shape != (d, d):
            raise UsageError("all states must have the same dimension")
    return [p * m for p, m in zip(probs, mats)]


def pgm_value(weighted) -> float:
    rho = sum(weighted)
    inv = _psd_power(rho, -0.5)
    return float(sum(np.trace(inv @ w @ inv @ w).real for w in weighted))


def helstrom_value(w0, w1) -> float:
    return float(0.5 * (np.trace(w0 + w1).real + np.abs(np.linalg.eigvalsh(w0 - w1)).sum()))


@dataclass
class GuessingReport:
    lower: float
    upper: float
    pgm: float
    eigen_upper: float
    exact: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def quantum_guessing(probs, states) -> GuessingReport:
    w = _weighted_states(probs, states)
    pgm = pgm_value(w)
    # tr(E_i w_i) <= lambda_max(w_i) tr(E_i) and the tr(E_i) add up to d
    eig = float(w[0].shape[0] * max(np.linalg.eigvalsh(m)[-1] for m in w))
    exact = helstrom_value(*w) if len(w) == 2 else None
    upper = min(1.0, eig, float(np.sqrt(pgm)))
    return GuessingReport(pgm, upper, pgm, eig, exact)


def guessing_probability(probs=None, states=None, joint=None):
    """Classical (``joint``) or quantum (``probs`` with ``states``) guessing probability."""
    if joint is not None:
        v = classical_guessing(joint)
        return GuessingReport(v, v, v, v, v)
    if probs is None or states is None:
        raise UsageError("supply either joint, or probs with states")
    return quantum_guessing(probs, states)


def deletion_key_guessing():
    """Bob's best chance of guessing a[y] after answering the deletion round honestly.

    For every (x, y', y) with y != y', Alice measures row x and Bob measures
    column y'. The label is a[y]; Bob keeps b' and his post-measurement
    qubits. Because b' is classical the value is a sum of Helstrom values over
    the blocks b'. Returns ``{(x, y', y): probability}``.
    """
    from .. import qsim
    from ..devices import ALICE_QUBITS, _banks, enumerate_branches, to_bit, two_epr_state

    alice, bob = _banks()
    out = {}
    for x in range(3):
        for yp in range(3):
            blocks = {}
            for p1, o1, st1 in enumerate_branches(two_epr_state(), bob[yp]):
                bprime = tuple(to_bit(o) for o in o1)
                for p2, o2, st2 in enumerate_branches(st1, alice[x]):
                    a = [to_bit(o) for o in o2]
                    reduced = qsim.partial_trace(st2, ALICE_QUBITS).matrix
                    blocks.setdefault(bprime, []).append((p1 * p2, a, reduced))
            for y in range(3):
                if y == yp:
                    continue
                total = 0.0
                for entries in blocks.values():
                    w = [np.zeros((4, 4), dtype=complex), np.zeros((4, 4), dtype=complex)]
                    for p, a, rho in entries:
                        w[a[y]] += p * rho
                    total += helstrom_value(*w)
                out[(x, yp, y)] = total
    return out
