"""Classical primitives: Toeplitz hashing, key padding, syndrome reconciliation, one-time pads.

Bit strings are ``uint8`` numpy arrays of 0/1 values. For JSON they are
serialized as hex of the bytes packed with little-endian bit order (bit ``i``
of the string is bit ``i % 8`` of byte ``i // 8``) together with the bit
length.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ResourceError, UsageError
from .stats import binary_entropy

DEFAULT_ENUMERATION_CAP = 1 << 24


# -- bit strings ------------------------------------------------------------------

def as_bits(v, length: int | None = None) -> np.ndarray:
    if isinstance(v, str):
        v = [int(c) for c in v]
    b = np.asarray(v, dtype=np.uint8).ravel()
    if b.size and b.max() > 1:
        raise UsageError("bit strings may only contain 0 and 1")
    if length is not None and b.size != length:
        raise UsageError(f"expected {length} bits, got {b.size}")
    return b


def bits_to_str(b) -> str:
    return "".join(str(int(v)) for v in np.asarray(b).ravel())


def bits_to_hex(b) -> str:
    b = as_bits(b)
    return np.packbits(b, bitorder="little").tobytes().hex() if b.size else ""


def hex_to_bits(hexstr: str, bit_len: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(hexstr), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    if bits.size < bit_len:
        raise UsageError("hex string is shorter than the declared bit length")
    return bits[:bit_len].copy()


def bits_json(b) -> dict:
    b = as_bits(b)
    return {"hex": bits_to_hex(b), "bit_len": int(b.size)}


def otp_xor(a, b) -> np.ndarray:
    a, b = as_bits(a), as_bits(b)
    if a.size != b.size:
        raise UsageError(f"length mismatch: {a.size} vs {b.size}")
    return a ^ b


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=int(n), dtype=np.uint8)


# -- padding ----------------------------------------------------------------------

def pad_key(key, l: int) -> np.ndarray:
    """Injective map from keys of length <= l to (l+1)-bit strings: k 1 0^(l-|k|)."""
    k = as_bits(key)
    if k.size > l:
        raise UsageError(f"key of length {k.size} exceeds l={l}")
    out = np.zeros(l + 1, dtype=np.uint8)
    out[: k.size] = k
    out[k.size] = 1
    return out


def unpad_key(padded) -> np.ndarray:
    p = as_bits(padded)
    ones = np.flatnonzero(p)
    if ones.size == 0:
        raise UsageError("not a padded key: no terminator bit")
    return p[: ones[-1]].copy()


# -- Toeplitz hashing --------------------------------------------------------------

@dataclass(frozen=True)
class ToeplitzHash:
    """n x s Toeplitz matrix over GF(2) with T[i, j] = seed[i - j + s - 1]."""

    s: int
    n: int
    seed: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 < self.n <= self.s:
            raise UsageError("need 0 < n <= s")
        seed = as_bits(self.seed, self.s + self.n - 1)
        seed.setflags(write=False)
        object.__setattr__(self, "seed", seed)

    @classmethod
    def random(cls, s: int, n: int, rng: np.random.Generator) -> "ToeplitzHash":
        return cls(s, n, random_bits(rng, s + n - 1))

    def matrix(self) -> np.ndarray:
        win = np.lib.stride_tricks.sliding_window_view(self.seed, self.s)
        return win[: self.n, ::-1]


def hash_apply(h: ToeplitzHash, k) -> np.ndarray:
    k = as_bits(k)
    if k.size != h.s:
        raise UsageError(f"hash expects {h.s} input bits, got {k.size}")
    return (h.matrix().astype(np.int64) @ k % 2).astype(np.uint8)


def toeplitz_collision_table(s: int, n: int) -> np.ndarray:
    """Exact Pr_seed[h(x) = h(x')] for every input pair, by enumerating all seeds.

    Returns a (2^s, 2^s) array; the diagonal is 1. Feasible for s + n <= 16.
    """
    if s + n - 1 > 16 or s > 12:
        raise ResourceError("exhaustive seed enumeration is limited to s <= 12 and s + n <= 17")
    inputs = ((np.arange(1 << s)[:, None] >> np.arange(s)) & 1).astype(np.int64)  # (2^s, s)
    counts = np.zeros((1 << s, 1 << s), dtype=np.int64)
    weights = 1 << np.arange(n)
    for seed in range(1 << (s + n - 1)):
        bits = (seed >> np.arange(s + n - 1)) & 1
        h = ToeplitzHash(s, n, bits)
        codes = ((inputs @ h.matrix().T.astype(np.int64)) % 2) @ weights
        onehot = np.zeros((1 << s, 1 << n), dtype=np.int64)
        onehot[np.arange(1 << s), codes] = 1
        counts += onehot @ onehot.T
    return counts / float(1 << (s + n - 1))


# -- syndrome codes ----------------------------------------------------------------

def syndrome_length(eps: float, l: int, lam_ec: float) -> int:
    """ceil(h2(2 eps) l + log2(1 / lam_ec))."""
    return int(math.ceil(binary_entropy(2 * eps) * l + math.log2(1.0 / lam_ec) - 1e-12))


def _pack_rows(m: np.ndarray) -> np.ndarray:
    """Pack the rows of a 0/1 matrix into uint64 words (little-endian bits)."""
    m = np.asarray(m, dtype=np.uint8)
    words = -(-m.shape[1] // 64) if m.shape[1] else 1
    padded = np.zeros((m.shape[0], words * 64), dtype=np.uint8)
    padded[:, : m.shape[1]] = m
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def _combinations(n: int, w: int, limit: int | None = None) -> np.ndarray:
    """The first ``limit`` weight-w combinations of range(n) in lexicographic order."""
    if w == 0:
        return np.zeros((1 if limit != 0 else 0, 0), dtype=np.intp)
    it = itertools.islice(itertools.combinations(range(n), w), limit)
    return np.array(list(it), dtype=np.intp).reshape(-1, w)


def _weights(packed: np.ndarray) -> np.ndarray:
    """Hamming weights of packed rows."""
    if packed.shape[1] == 1:
        return np.bitwise_count(packed[:, 0]).astype(np.int64)
    return np.bitwise_count(packed).sum(axis=1, dtype=np.int64)


def _unrank_combination(n: int, w: int, k: int) -> np.ndarray:
    """The ``k``-th ``w``-subset of ``range(n)`` in lexicographic order."""
    out = []
    start = 0
    for left in range(w, 0, -1):
        for i in range(start, n):
            c = math.comb(n - i - 1, left - 1)
            if k < c:
                out.append(i)
                start = i + 1
                break
            k -= c
    return np.array(out, dtype=np.intp)


class SyndromeCode:
    """Uniformly random r x length parity-check matrix with bounded-distance decoding."""

    def __init__(self, matrix, radius: int):
        H = np.asarray(matrix, dtype=np.uint8) % 2
        if H.ndim != 2:
            raise UsageError("parity-check matrix must be two-dimensional")
        self.r, self.length = H.shape
        if self.r > self.length:
            raise UsageError("syndrome longer than the codeword")
        if not 0 <= radius or 2 * radius >= max(self.length, 1):
            raise UsageError(f"decode radius {radius} must be below half of {self.length}")
        H.setflags(write=False)
        self.H = H
        self.radius = int(radius)
        self._rref = None

    @classmethod
    def random(cls, length: int, r: int, radius: int, rng: np.random.Generator) -> "SyndromeCode":
        r = int(r)
        if r > length:
            raise UsageError("syndrome longer than the codeword")
        return cls(rng.integers(0, 2, size=(r, int(length)), dtype=np.uint8), radius)

    @classmethod
    def for_params(cls, length: int, eps: float, lam_ec: float, rng, box_count: int | None = None):
        """Code for a key of ``length`` bits.

        The syndrome length uses ``box_count`` (the number of boxes) when given,
        and is clamped to ``length``.
        """
        r = min(syndrome_length(eps, length if box_count is None else box_count, lam_ec), length)
        return cls.random(length, r, int(math.floor(2 * eps * length)), rng)

    # elimination ---------------------------------------------------------------
    def _reduce(self):
        if self._rref is None:
            r, L = self.r, self.length
            aug = np.concatenate([self.H.copy(), np.eye(r, dtype=np.uint8)], axis=1)
            pivots = []
            row = 0
            for col in range(L):
                if row == r:
                    break
                nz = np.flatnonzero(aug[row:, col]) + row
                if nz.size == 0:
                    continue
                p = nz[0]
                if p != row:
                    aug[[row, p]] = aug[[p, row]]
                hits = np.flatnonzero(aug[:, col])
                hits = hits[hits != row]
                aug[hits] ^= aug[row]
                pivots.append(col)
                row += 1
            rank = row
            pivots = np.array(pivots, dtype=np.intp)
            free = np.setdiff1d(np.arange(L), pivots)
            E = aug[:, L:]
            A = aug[:rank][:, free]  # pivot bits = s'' xor A @ free bits
            self._rref = {
                "rank": rank,
                "pivots": pivots,
                "free": free,
                "E": E,
                "A": A,
                "A_cols": _pack_rows(A.T) if rank else np.zeros((len(free), 1), dtype=np.uint64),
            }
        return self._rref

    def candidate_count(self) -> int:
        """Number of free-part patterns the decoder enumerates."""
        f = len(self._reduce()["free"])
        return min(1 << f, sum(math.comb(f, w) for w in range(min(self.radius, f) + 1)))


def syndrome_of(code: SyndromeCode, k) -> np.ndarray:
    k = as_bits(k)
    if k.size != code.length:
        raise UsageError(f"expected {code.length} bits, got {k.size}")
    return (code.H.astype(np.int64) @ k % 2).astype(np.uint8)


@dataclass
class DecodeResult:
    """Outcome of bounded-distance decoding.

    ``status`` is ``"ok"`` (unique candidate), ``"ambiguous"`` (several
    candidates within the radius; the nearest, then lexicographically
    smallest, is returned) or ``"not_found"`` (``key`` is None).
    ``exhaustive`` is False when enumeration stopped at the cap.
    """

    status: str
    key: np.ndarray | None
    distance: int | None
    candidates: int
    enumerated: int
    exhaustive: bool

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "distance": self.distance,
            "candidates": self.candidates,
            "enumerated": self.enumerated,
            "exhaustive": self.exhaustive,
        }


def decode(code: SyndromeCode, k_b, syn_a, cap: int = DEFAULT_ENUMERATION_CAP, fallback: str = "raise") -> DecodeResult:
    """Find the strings within the decode radius of ``k_b`` whose syndrome is ``syn_a``.

    Candidates are written as ``k_b xor d``. Each error pattern ``d`` is fixed
    by its bits on the free columns of the reduced parity-check matrix, and
    a pattern of weight at most the radius has free part of weight at most the
    radius, so enumerating free parts by weight covers the whole ball.

    When the enumeration would exceed ``cap`` patterns, ``fallback="raise"``
    raises :class:`ResourceError`; ``fallback="truncate"`` enumerates the
    lowest free-part weights up to the cap and reports ``exhaustive=False``.
    """
    k_b = as_bits(k_b, code.length)
    syn_a = as_bits(syn_a, code.r)
    if fallback not in ("raise", "truncate"):
        raise UsageError("fallback must be 'raise' or 'truncate'")
    red = code._reduce()
    rank, pivots, free = red["rank"], red["pivots"], red["free"]
    target = syn_a ^ syndrome_of(code, k_b)
    t2 = (red["E"].astype(np.int64) @ target % 2).astype(np.uint8)
    if t2[rank:].any():
        return DecodeResult("not_found", None, None, 0, 0, True)
    base = _pack_rows(t2[:rank][None, :])[0] if rank else np.zeros(1, dtype=np.uint64)
    A_cols = red["A_cols"]
    nfree = len(free)
    total = code.candidate_count()
    exhaustive = True
    if total > cap:
        if fallback == "raise":
            raise ResourceError(f"decoding would enumerate {total} patterns, above the cap {cap}")
        exhaustive = False

    found = []  # (distance, free-column indices) for every pattern inside the ball
    enumerated = 0
    ball_patterns = sum(math.comb(nfree, w) for w in range(min(code.radius, nfree) + 1))
    if (1 << nfree) <= ball_patterns and (1 << nfree) <= cap:
        # whole coset: XOR tables over all subsets of the free columns
        piv = np.empty((1 << nfree, base.size), dtype=np.uint64)
        piv[0] = base
        for j in range(nfree):
            piv[1 << j : 2 << j] = piv[: 1 << j] ^ A_cols[j]
        idx = np.arange(1 << nfree, dtype=np.uint64)
        dist = _weights(piv) + np.bitwise_count(idx).astype(np.int64)
        for k in np.flatnonzero(dist <= code.radius):
            found.append((int(dist[k]), np.flatnonzero((int(k) >> np.arange(nfree)) & 1)))
        enumerated = 1 << nfree
    else:
        # Lexicographic weight-w combinations starting at column i are i
        # followed by the weight-(w-1) combinations over columns > i, which
        # form a suffix of the previous table; each level costs one XOR pass.
        prev = None
        for w in range(min(code.radius, nfree) + 1):
            count = math.comb(nfree, w)
            if enumerated + count > cap:
                exhaustive = False
                combos = _combinations(nfree, w, max(0, cap - enumerated))
                if len(combos) == 0:
                    break
                piv = base ^ A_cols[combos[:, 0]]
                for j in range(1, w):
                    piv ^= A_cols[combos[:, j]]
                dist = _weights(piv) + w
                for k in np.flatnonzero(dist <= code.radius):
                    found.append((int(dist[k]), combos[k]))
                enumerated += len(combos)
                break
            if w == 0:
                piv = base[None, :].copy()
            else:
                blocks = []
                prev_total = math.comb(nfree, w - 1)
                for i in range(nfree - w + 1):
                    start = prev_total - math.comb(nfree - i - 1, w - 1)
                    blocks.append(prev[start:] ^ A_cols[i])
                piv = np.concatenate(blocks)
            dist = _weights(piv) + w
            for k in np.flatnonzero(dist <= code.radius):
                found.append((int(dist[k]), _unrank_combination(nfree, w, int(k))))
            enumerated += count
            prev = piv

    if not found:
        return DecodeResult("not_found", None, None, 0, enumerated, exhaustive)

    def build(combo):
        d = np.zeros(code.length, dtype=np.uint8)
        d[free[combo]] = 1
        d[pivots] = t2[:rank] ^ (np.bitwise_xor.reduce(red["A"][:, combo], axis=1) if len(combo) else 0)
        return k_b ^ d

    best = min(found, key=lambda t: t[0])[0]
    keys = [build(c) for dist_, c in found if dist_ == best]
    key = min(keys, key=lambda k: tuple(k.tolist()))
    status = "ok" if len(found) == 1 else "ambiguous"
    return DecodeResult(status, key, best, len(found), enumerated, exhaustive)


# -- one-time-pad symmetry ------------------------------------------------------------

def otp_symmetry_distributions(s: int, p_z: dict, side_info: dict | None = None):
    """Exact joint laws of (C, U, Z, side-info label) for the two pad constructions.

    ``p_z`` maps s-bit tuples to probabilities; ``side_info`` maps each z to a
    dict of label probabilities (default: a single trivial label). The first
    law draws U uniform and sets C = Z xor U; the second draws C uniform and
    sets U = Z xor C.
    """
    if not 1 <= s <= 3:
        raise UsageError("s must be between 1 and 3 for exhaustive enumeration")
    strings = list(itertools.product((0, 1), repeat=s))
    p_z = {tuple(z): Fraction(p) for z, p in p_z.items()}
    if sum(p_z.values()) != 1:
        raise UsageError("P_Z must sum to one")
    side_info = side_info or {z: {"-": Fraction(1)} for z in strings}
    xor = lambda a, b: tuple(i ^ j for i, j in zip(a, b))
    half = Fraction(1, 2**s)
    direct, swapped = Counter(), Counter()
    for z, pz in p_z.items():
        for label, pe in side_info[z].items():
            for u in strings:
                direct[(xor(z, u), u, z, label)] += half * pz * Fraction(pe)
            for c in strings:
                swapped[(c, xor(z, c), z, label)] += half * pz * Fraction(pe)
    return dict(direct), dict(swapped)


def otp_symmetry_selftest(s: int, p_z: dict, side_info: dict | None = None) -> bool:
    direct, swapped = otp_symmetry_distributions(s, p_z, side_info)
    drop = lambda d: {k: v for k, v in d.items() if v != 0}
    return drop(direct) == drop(swapped)
