"""Magic square games: inputs, win predicates and repeated-game evaluation.

Answers are 3-bit strings. Scalar APIs use :class:`MsAnswer`; vectorized
APIs use ``uint8`` arrays of shape ``(..., 3)`` where ``a[..., j]`` is the
bit ``a[j]``. Strings like ``"110"`` list ``a[0] a[1] a[2]`` left to right.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import UsageError
from .stats import Estimate

GAMES = ("MS", "MSB", "MSE")

EVEN_ANSWERS = np.array([b for b in itertools.product((0, 1), repeat=3) if sum(b) % 2 == 0], dtype=np.uint8)
ODD_ANSWERS = np.array([b for b in itertools.product((0, 1), repeat=3) if sum(b) % 2 == 1], dtype=np.uint8)


def _bits(s) -> tuple:
    if isinstance(s, str):
        if len(s) != 3 or set(s) - {"0", "1"}:
            raise UsageError(f"expected a 3-bit string, got {s!r}")
        return tuple(int(c) for c in s)
    t = tuple(int(v) for v in s)
    if len(t) != 3 or any(v not in (0, 1) for v in t):
        raise UsageError(f"expected 3 bits, got {s!r}")
    return t


def _trit(v) -> int:
    v = int(v)
    if v not in (0, 1, 2):
        raise UsageError(f"expected a trit, got {v}")
    return v


@dataclass(frozen=True)
class MsQuestion:
    x: int
    y: int

    def __post_init__(self):
        _trit(self.x)
        _trit(self.y)


@dataclass(frozen=True)
class MsAnswer:
    """Alice's even-parity and Bob's odd-parity 3-bit answers."""

    a: tuple
    b: tuple

    def __init__(self, a, b):
        a, b = _bits(a), _bits(b)
        if sum(a) % 2:
            raise UsageError(f"Alice's answer {a} has odd parity")
        if sum(b) % 2 == 0:
            raise UsageError(f"Bob's answer {b} has even parity")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


BOT = None  # the anchor symbol; a second-round input is BOT or an (x, y) pair


def _check_z(z, c):
    if z is BOT:
        return
    if c is None:
        raise UsageError("a guess c is required when z is not the anchor symbol")
    if int(c) not in (0, 1):
        raise UsageError("guess c must be a bit")


def ms_predicate(q: MsQuestion, ans: MsAnswer) -> bool:
    return ans.a[q.y] == ans.b[q.x]


def msb_predicate(x, yprime, a, bprime, z, c=None) -> bool:
    """Two-round deletion game: first-round match and, unless anchored, a[y] = c."""
    _check_z(z, c)
    first = ms_predicate(MsQuestion(x, yprime), MsAnswer(a, bprime))
    if z is BOT:
        return first
    zx, zy = z
    if _trit(zy) == _trit(yprime) or int(zx) != int(x):
        raise UsageError("second-round input must carry the same x and a column other than y'")
    return first and _bits(a)[zy] == int(c)


def mse_predicate(x, y, a, b, z, c=None) -> bool:
    """Eavesdropper game: a[y] = b[x] and, unless anchored, Eve's c equals both."""
    _check_z(z, c)
    ans = MsAnswer(a, b)
    first = ms_predicate(MsQuestion(x, y), ans)
    if z is BOT:
        return first
    return first and ans.a[y] == int(c)


# -- vectorized predicates ---------------------------------------------------

def parity_ok(a: np.ndarray, even: bool) -> np.ndarray:
    p = np.asarray(a, dtype=np.uint8).sum(axis=-1) % 2
    return p == 0 if even else p == 1


def ms_wins(x, y, a, b) -> np.ndarray:
    """Per-instance MS wins; parity-illegal answers count as losses."""
    x = np.asarray(x, dtype=np.intp)
    y = np.asarray(y, dtype=np.intp)
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    ay = np.take_along_axis(a, y[..., None], axis=-1)[..., 0]
    bx = np.take_along_axis(b, x[..., None], axis=-1)[..., 0]
    return (ay == bx) & parity_ok(a, True) & parity_ok(b, False)


# -- input sampling -----------------------------------------------------------

@dataclass(frozen=True)
class RepeatedGameSpec:
    game: str
    l: int
    t: int
    alpha: float = 0.0

    def __post_init__(self):
        if self.game not in GAMES:
            raise UsageError(f"unknown game {self.game!r}; expected one of {GAMES}")
        if self.l < 1 or not 0 <= self.t <= self.l:
            raise UsageError("need l >= 1 and 0 <= t <= l")
        if not 0.0 <= self.alpha <= 1.0:
            raise UsageError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class GameInputs:
    """Inputs for l instances.

    ``y`` is the column checked in the first round for MS/MSE. For MSB the
    first-round column is ``yprime`` and ``y`` is the second-round column.
    ``anchored[i]`` is True when instance ``i`` receives the anchor symbol.
    """

    x: np.ndarray
    y: np.ndarray
    anchored: np.ndarray
    yprime: np.ndarray | None = None

    def z(self, i: int):
        return BOT if self.anchored[i] else (int(self.x[i]), int(self.y[i]))


def sample_inputs(spec: RepeatedGameSpec, rng: np.random.Generator) -> GameInputs:
    l = spec.l
    x = rng.integers(0, 3, size=l)
    if spec.game == "MSB":
        yprime = rng.integers(0, 3, size=l)
        y = (yprime + rng.integers(1, 3, size=l)) % 3
    else:
        yprime = None
        y = rng.integers(0, 3, size=l)
    anchored = rng.random(l) < spec.alpha
    if spec.game == "MS":
        anchored = np.ones(l, dtype=bool)
    return GameInputs(x=x, y=y, anchored=anchored, yprime=yprime)


# -- classical value ------------------------------------------------------------

def _win_table(x_relabel=None) -> np.ndarray:
    """W[f, g] = number of (x, y) won by Alice function f and Bob function g."""
    fa = np.array(list(itertools.product(range(4), repeat=3)))  # fa[f, x] -> even answer index
    perm = np.arange(3) if x_relabel is None else np.asarray(x_relabel)
    if sorted(perm.tolist()) != [0, 1, 2]:
        raise UsageError("x_relabel must be a permutation of (0, 1, 2)")
    A = EVEN_ANSWERS[fa][:, perm, :]  # (64, 3 x, 3 bits)
    B = ODD_ANSWERS[fa]  # (64, 3 y, 3 bits)
    wins = np.zeros((64, 64), dtype=np.int64)
    for x in range(3):
        for y in range(3):
            wins += A[:, x, y][:, None] == B[:, y, x][None, :]
    return wins


@dataclass(frozen=True)
class ClassicalValue:
    value: Fraction
    optimal_pairs: int
    strategy_pairs: int


def classical_value_bruteforce(game: str = "MS", alice_fixed: str | None = None, x_relabel=None) -> ClassicalValue:
    """Exact best average win probability over deterministic strategy pairs.

    ``alice_fixed`` restricts Alice to always answering that even string.
    ``x_relabel`` permutes Alice's input labels.
    """
    if game.upper() != "MS":
        raise UsageError("classical value is only defined here for the single-round MS game")
    wins = _win_table(x_relabel)
    if alice_fixed is not None:
        a = np.array(_bits(alice_fixed), dtype=np.uint8)
        if a.sum() % 2:
            raise UsageError("Alice's fixed answer must have even parity")
        idx = int(np.flatnonzero((EVEN_ANSWERS == a).all(axis=1))[0])
        fa = np.array(list(itertools.product(range(4), repeat=3)))
        wins = wins[(fa == idx).all(axis=1)]
    best = int(wins.max())
    return ClassicalValue(Fraction(best, 9), int((wins == best).sum()), int(wins.size))


def deterministic_pair_value(alice: dict, bob: dict) -> Fraction:
    """Value of one deterministic pair given as {x: answer} and {y: answer} maps."""
    won = sum(ms_predicate(MsQuestion(x, y), MsAnswer(alice[x], bob[y])) for x in range(3) for y in range(3))
    return Fraction(won, 9)


def optimal_classical_pair():
    """One deterministic pair achieving 8/9, as (alice, bob) bit arrays of shape (3, 3)."""
    wins = _win_table()
    f, g = np.unravel_index(int(np.argmax(wins)), wins.shape)
    fa = np.array(list(itertools.product(range(4), repeat=3)))
    return EVEN_ANSWERS[fa[f]], ODD_ANSWERS[fa[g]]


# -- repeated games -------------------------------------------------------------

class StrategyRole:
    """Interface for strategies played in :func:`evaluate_repeated`.

    ``first_round(x, y)`` returns answer arrays ``(a, b)`` of shape (l, 3);
    for MSB ``y`` is the first-round column y'. ``second_round(inputs)``
    returns guess bits of shape (l,) (entries at anchored instances are
    ignored). Strategies may keep state between the two calls.
    """

    def first_round(self, x, y, rng):
        raise NotImplementedError

    def second_round(self, inputs: GameInputs, rng):
        return np.zeros(len(inputs.x), dtype=np.uint8)


class IidStrategy(StrategyRole):
    """Plays each MS instance independently, winning with probability ``p``."""

    def __init__(self, p_win: float):
        self.p_win = float(p_win)

    def first_round(self, x, y, rng):
        l = len(x)
        a = EVEN_ANSWERS[rng.integers(0, 4, size=l)]
        b = ODD_ANSWERS[rng.integers(0, 4, size=l)].copy()
        want = np.where(rng.random(l) < self.p_win, a[np.arange(l), y], 1 - a[np.arange(l), y])
        fix = b[np.arange(l), x] != want
        # flip b[x] and the next bit to keep odd parity
        b[fix, x[fix]] ^= 1
        b[fix, (x[fix] + 1) % 3] ^= 1
        self._a = a
        return a, b

    def second_round(self, inputs, rng):
        return self._a[np.arange(len(inputs.x)), inputs.y]


class LosingStrategy(StrategyRole):
    """Always loses the first-round check."""

    def first_round(self, x, y, rng):
        return IidStrategy(0.0).first_round(x, y, rng)


def play_once(spec: RepeatedGameSpec, strategy: StrategyRole, rng: np.random.Generator) -> int:
    """Number of instances won in one play."""
    inp = sample_inputs(spec, rng)
    first_col = inp.yprime if spec.game == "MSB" else inp.y
    a, b = strategy.first_round(inp.x, first_col, rng)
    won = ms_wins(inp.x, first_col, a, b)
    if spec.game != "MS" and not inp.anchored.all():
        c = np.asarray(strategy.second_round(inp, rng), dtype=np.uint8)
        ay = np.asarray(a, dtype=np.uint8)[np.arange(spec.l), inp.y]
        won &= inp.anchored | (ay == c)
    return int(won.sum())


def evaluate_repeated(spec: RepeatedGameSpec, strategy_factory, trials: int, rng: np.random.Generator) -> Estimate:
    """Estimate Pr[at least t of the l instances are won].

    ``strategy_factory`` is a zero-argument callable giving a fresh strategy
    per trial (or a strategy instance reused across trials).
    """
    wins = 0
    for _ in range(int(trials)):
        strategy = strategy_factory() if callable(strategy_factory) and not isinstance(strategy_factory, StrategyRole) else strategy_factory
        wins += play_once(spec, strategy, rng) >= spec.t
    return Estimate.from_counts(wins, int(trials))
