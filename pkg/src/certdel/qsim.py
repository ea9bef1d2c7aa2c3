"""Small dense quantum states (up to 6 qubits).

Qubit 0 is the most significant tensor factor, so ``tensor(a, b)`` puts ``a``
on the low-numbered qubits. All objects are immutable; operations return new
objects.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import UsageError

TOL = 1e-9
PROB_FLOOR = 1e-12
MAX_QUBITS = 6

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _qubit_count(dim: int) -> int:
    q = int(dim).bit_length() - 1
    if dim < 1 or (1 << q) != dim:
        raise UsageError(f"dimension {dim} is not a power of two")
    if q > MAX_QUBITS:
        raise UsageError(f"{q} qubits exceeds the {MAX_QUBITS}-qubit limit")
    return q


class StateVector:
    """Normalized pure state."""

    __slots__ = ("amplitudes", "n_qubits")

    def __init__(self, amplitudes, check: bool = True):
        amps = _frozen(np.ravel(amplitudes))
        self.n_qubits = _qubit_count(amps.size)
        if check and abs(np.vdot(amps, amps).real - 1.0) > TOL:
            raise UsageError("state vector is not normalized")
        self.amplitudes = amps

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), check=False)

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    __slots__ = ("matrix", "n_qubits")

    def __init__(self, matrix, check: bool = True):
        m = _frozen(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UsageError("density matrix must be square")
        self.n_qubits = _qubit_count(m.shape[0])
        self.matrix = m
        if check:
            self.validate()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self) -> None:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > TOL:
            raise UsageError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TOL:
            raise UsageError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -TOL:
            raise UsageError("density matrix has a negative eigenvalue")

    def __repr__(self):
        return f"DensityOperator(n_qubits={self.n_qubits})"


class PmObservable:
    """A +/-1 valued observable: Hermitian with square equal to identity."""

    __slots__ = ("matrix", "n_qubits", "_proj")

    def __init__(self, matrix, check: bool = True):
        m = _frozen(matrix)
        self.n_qubits = _qubit_count(m.shape[0])
        if check:
            if np.max(np.abs(m - m.conj().T)) > TOL:
                raise UsageError("observable is not Hermitian")
            if np.max(np.abs(m @ m - np.eye(m.shape[0]))) > TOL:
                raise UsageError("observable does not square to the identity")
        self.matrix = m
        eye = np.eye(m.shape[0])
        self._proj = {1: _frozen((eye + m) / 2), -1: _frozen((eye - m) / 2)}

    def projector(self, outcome: int) -> np.ndarray:
        return self._proj[outcome]

    def __neg__(self):
        return PmObservable(-self.matrix, check=False)

    def __matmul__(self, other: "PmObservable") -> np.ndarray:
        return self.matrix @ other.matrix

    def __repr__(self):
        return f"PmObservable(n_qubits={self.n_qubits})"


# -- constructors -----------------------------------------------------------

def ket(bits: str) -> StateVector:
    """Computational basis state, e.g. ``ket("01")``."""
    v = np.zeros(1 << len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return StateVector(v)


def plus_state() -> StateVector:
    return StateVector(np.array([1, 1]) / np.sqrt(2))


def bell_pair() -> StateVector:
    """(|00> + |11>)/sqrt(2)."""
    return StateVector(np.array([1, 0, 0, 1]) / np.sqrt(2))


def pauli(label: str) -> np.ndarray:
    """Tensor product of Pauli matrices, e.g. ``pauli("XZ")``."""
    return reduce(np.kron, (PAULIS[c] for c in label))


def pauli_observable(label: str, sign: int = 1) -> PmObservable:
    return PmObservable(sign * pauli(label), check=False)


def maximally_mixed(n_qubits: int) -> DensityOperator:
    d = 1 << n_qubits
    return DensityOperator(np.eye(d) / d)


def random_density(rng: np.random.Generator, n_qubits: int, rank: int | None = None) -> DensityOperator:
    """Random mixed state from a Ginibre ensemble."""
    d = 1 << n_qubits
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


# -- structural operations --------------------------------------------------

def expand_operator(op: np.ndarray, qubits, n_qubits: int) -> np.ndarray:
    """Embed ``op`` acting on ``qubits`` (in the listed order) into ``n_qubits``."""
    qubits = list(qubits)
    k = len(qubits)
    if op.shape != (1 << k, 1 << k):
        raise UsageError("operator size does not match the qubit subset")
    if len(set(qubits)) != k or any(q < 0 or q >= n_qubits for q in qubits):
        raise UsageError(f"bad qubit subset {qubits} for {n_qubits} qubits")
    if qubits == list(range(k)):
        return np.kron(op, np.eye(1 << (n_qubits - k)))
    full = np.kron(op, np.eye(1 << (n_qubits - k))).reshape([2] * (2 * n_qubits))
    order = qubits + [q for q in range(n_qubits) if q not in qubits]
    perm = [order.index(j) for j in range(n_qubits)]
    full = full.transpose(perm + [p + n_qubits for p in perm])
    return full.reshape(1 << n_qubits, 1 << n_qubits)


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    if a.n_qubits + b.n_qubits > MAX_QUBITS:
        raise UsageError("tensor product exceeds the qubit limit")
    return DensityOperator(np.kron(a.matrix, b.matrix), check=False)


def partial_trace(state: DensityOperator, qubits) -> DensityOperator:
    """Trace out the listed qubits."""
    n = state.n_qubits
    out = sorted(set(qubits), reverse=True)
    if any(q < 0 or q >= n for q in out):
        raise UsageError(f"bad qubit subset {list(qubits)} for {n} qubits")
    if len(out) == n:
        raise UsageError("cannot trace out every qubit")
    t = state.matrix.reshape([2] * (2 * n))
    cur = n
    for q in out:
        t = np.trace(t, axis1=q, axis2=q + cur)
        cur -= 1
    d = 1 << cur
    return DensityOperator(t.reshape(d, d), check=False)


def apply_unitary(state: DensityOperator, unitary, qubits=None) -> DensityOperator:
    u = np.asarray(unitary, dtype=complex)
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > TOL:
        raise UsageError("operator is not unitary")
    if qubits is None:
        qubits = range(state.n_qubits)
    full = expand_operator(u, qubits, state.n_qubits)
    return DensityOperator(full @ state.matrix @ full.conj().T, check=False)


def embed_observable(obs: PmObservable, qubits, n_qubits: int) -> PmObservable:
    return PmObservable(expand_operator(obs.matrix, qubits, n_qubits), check=False)


# -- measurement and distances ----------------------------------------------

def branch(state: DensityOperator, obs: PmObservable, outcome: int):
    """Probability and normalized post-state of one measurement outcome.

    The post-state is None when the probability is below ``PROB_FLOOR``.
    """
    if obs.matrix.shape != state.matrix.shape:
        raise UsageError("observable and state dimensions differ")
    p_op = obs.projector(outcome)
    pr = p_op @ state.matrix
    prob = float(np.trace(pr).real)
    if prob < PROB_FLOOR:
        return max(prob, 0.0), None
    return prob, DensityOperator(pr @ p_op / prob, check=False)


def outcome_probabilities(state: DensityOperator, obs: PmObservable) -> dict[int, float]:
    if obs.matrix.shape != state.matrix.shape:
        raise UsageError("observable and state dimensions differ")
    p_plus = float(np.trace(obs.projector(1) @ state.matrix).real)
    return {1: p_plus, -1: 1.0 - p_plus}


def measure_observable(state: DensityOperator, obs: PmObservable, rng: np.random.Generator):
    """Sample a +/-1 outcome by the Born rule; return it with the post-state."""
    probs = outcome_probabilities(state, obs)
    outcome = 1 if rng.random() < probs[1] else -1
    p, post = branch(state, obs, outcome)
    if post is None:
        outcome = -outcome
        p, post = branch(state, obs, outcome)
    return outcome, post


def trace_distance(a: DensityOperator, b: DensityOperator) -> float:
    """Half the trace norm of ``a - b``."""
    if a.matrix.shape != b.matrix.shape:
        raise UsageError("states have different dimensions")
    ev = np.linalg.eigvalsh(a.matrix - b.matrix)
    return float(min(1.0, 0.5 * np.abs(ev).sum()))


def commutator_norm(a, b) -> float:
    a = getattr(a, "matrix", a)
    b = getattr(b, "matrix", b)
    return float(np.linalg.norm(a @ b - b @ a, 2))
