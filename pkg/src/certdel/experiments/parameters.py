"""Parameter selection from the security conditions.

All logarithms are base 2. ``gamma`` is chosen so that gamma * l * eps^2
equals a fixed constant, which makes every condition monotone in ``l``; the
smallest feasible ``l`` is then found by binary search.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from ..errors import UsageError
from ..protocol.params import round_half_up
from ..stats import binary_entropy

L_CAP = 1 << 40


@dataclass(frozen=True)
class ConstantsConfig:
    """Game-value and parallel-repetition constants.

    ``c_B = 0.003`` comes from the deletion-game value bound (about 0.997);
    ``c_E`` has no published value and mirrors ``c_B`` as an unverified
    placeholder.
    """

    c_B: float = 0.003
    c_E: float = 0.003
    d_B: float = 1e-3
    d_E: float = 1e-3

    def __post_init__(self):
        if not (0 < self.c_B < 1 and 0 < self.c_E < 1):
            raise UsageError("c_B and c_E must lie in (0, 1)")
        if not (self.d_B > 0 and self.d_E > 0):
            raise UsageError("d_B and d_E must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def gamma_numerator(lam_com: float, lam_ci: float, lam_ec: float) -> float:
    """gamma * l * eps^2 = max{8 log(2/lam_com), log(32/lam_ci)/2, log(8/lam_ec)/2}."""
    return max(8 * math.log2(2 / lam_com), 0.5 * math.log2(32 / lam_ci), 0.5 * math.log2(8 / lam_ec))


def gamma_for(l: float, eps: float, lam_com: float, lam_ci: float, lam_ec: float) -> float:
    return gamma_numerator(lam_com, lam_ci, lam_ec) / (eps**2 * l)


def rate_terms(alpha: float, eps: float, k: ConstantsConfig) -> tuple:
    """(d_E (c_E,alpha - 2 eps)^3 alpha^2, d_B (c_B,alpha - eps)^3 alpha^2, h2(2 eps))."""
    ce = k.c_E * (1 - alpha)
    cb = k.c_B * (1 - alpha)
    return (k.d_E * (ce - 2 * eps) ** 3 * alpha**2, k.d_B * (cb - eps) ** 3 * alpha**2, binary_entropy(2 * eps))


def n_bounds(n, l, gamma, eps, alpha, lam_ci, lam_ec, k: ConstantsConfig) -> tuple:
    """Right-hand sides of the two message-length conditions."""
    rate_e, rate_b, h = rate_terms(alpha, eps, k)
    tail = math.log2(1 / lam_ec) + 2 * math.log2(2 / lam_ci)
    eve = rate_e * l - 2 * eps**2 * gamma * l - 2 * gamma * l - h * l - tail
    bob = rate_b * (1 - gamma) * l - gamma * l - h * l - tail
    return eve, bob


def check_conditions(n, l, eps, alpha, lam_com, lam_ci, lam_ec, k: ConstantsConfig, gamma: float | None = None) -> dict:
    """Evaluate every condition at ``l``; ``gamma`` defaults to the prescribed choice."""
    g = gamma_for(l, eps, lam_com, lam_ci, lam_ec) if gamma is None else gamma
    rate_e, rate_b, h = rate_terms(alpha, eps, k)
    eve, bob = n_bounds(n, l, g, eps, alpha, lam_ci, lam_ec, k)
    com_lhs = 2 ** (-((1 - 2 * g) ** 2) * l / 8) if g < 0.5 else 1.0
    return {
        "gamma": g,
        "gamma_below_half": g < 0.5,
        "combound": g < 0.5 and com_lhs <= lam_com / 2,
        "combound_lhs": com_lhs,
        "nbound_eve": n <= eve,
        "nbound_eve_rhs": eve,
        "nbound_bob": n <= bob,
        "nbound_bob_rhs": bob,
        "alphaepsbnd": min(rate_e, rate_b) > h,
        "alphaepsbnd_lhs": min(rate_e, rate_b),
        "h2_2eps": h,
    }


CONDITIONS = ("gamma_below_half", "combound", "nbound_eve", "nbound_bob")


@dataclass
class ParameterReport:
    feasible: bool
    l: int | None
    gamma: float | None
    test_size: int | None
    flags: dict
    binding: str | None
    inputs: dict
    constants: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def choose_parameters(lam_com, lam_ci, lam_ec, n, eps, alpha, constants: ConstantsConfig | None = None,
                      l_cap: int = L_CAP) -> ParameterReport:
    """Smallest l meeting every condition, or an infeasible report naming the binding one."""
    k = constants or ConstantsConfig()
    for name, v in (("lam_com", lam_com), ("lam_ci", lam_ci), ("lam_ec", lam_ec)):
        if not 0 < v <= 1:
            raise UsageError(f"{name} must lie in (0, 1]")
    if not 0 < eps < 1 or not 0 < alpha < 0.5 or n < 1:
        raise UsageError("need 0 < eps < 1, 0 < alpha < 1/2 and n >= 1")
    inputs = dict(lam_com=lam_com, lam_ci=lam_ci, lam_ec=lam_ec, n=n, eps=eps, alpha=alpha)
    check = lambda l: check_conditions(n, l, eps, alpha, lam_com, lam_ci, lam_ec, k)
    ok = lambda c: all(c[name] for name in CONDITIONS)

    top = check(l_cap)
    if not top["alphaepsbnd"] or not ok(top):
        binding = "alphaepsbnd" if not top["alphaepsbnd"] else next(c for c in CONDITIONS if not top[c])
        flags = {c: bool(top[c]) for c in CONDITIONS + ("alphaepsbnd",)}
        return ParameterReport(False, None, None, None, flags, binding, inputs, k.to_dict(), {"at_cap": top, "l_cap": l_cap})
    lo, hi = 1, l_cap  # ok(hi) holds; find the smallest such l
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(check(mid)):
            hi = mid
        else:
            lo = mid + 1
    res = check(lo)
    flags = {c: bool(res[c]) for c in CONDITIONS + ("alphaepsbnd",)}
    return ParameterReport(True, lo, res["gamma"], round_half_up(res["gamma"] * lo), flags, None, inputs, k.to_dict(), res)
