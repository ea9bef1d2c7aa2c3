"""Protocol parameters and derived sizes."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from ..crypto import syndrome_length
from ..errors import UsageError
from ..stats import binom_cdf

EMPTY_REMAINDER_WARN = 1e-9


def round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class ProtocolParams:
    """Inputs of one protocol run.

    ``test_size`` is round(gamma * l) with halves rounded up. The test passes
    with at least ceil((1 - eps) |T|) matches and the deletion check with at
    least ceil((1 - 2 eps) |S \\ T|). ``yprime_step`` chooses whether y' is
    sent with the test request (5) or with the deletion request (15).
    """

    n: int
    l: int
    alpha: float
    gamma: float
    eps: float
    lam_com: float = 1e-3
    lam_ci: float = 1e-3
    lam_ec: float = 1e-3
    yprime_step: int = 15
    code_seed: int = 0
    decoder_cap: int = 1 << 20  # truncated tables stay near 60 MB at l=600

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("n must be positive")
        if self.n > self.l + 1:
            raise UsageError("n may not exceed l + 1 (hash output longer than its input)")
        if not 0 < self.alpha < 0.5:
            raise UsageError("alpha must lie in (0, 1/2)")
        if not 0 < self.gamma < 0.5:
            raise UsageError("gamma must lie in (0, 1/2)")
        if not 0 <= self.eps < 1:
            raise UsageError("eps must lie in [0, 1)")
        for name in ("lam_com", "lam_ci", "lam_ec"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise UsageError(f"{name} must lie in (0, 1]")
        if self.l < 4 / (1 - 2 * self.gamma) ** 2:
            raise UsageError(f"l={self.l} is below 4/(1-2 gamma)^2 = {4 / (1 - 2 * self.gamma) ** 2:.3f}")
        if self.yprime_step not in (5, 15):
            raise UsageError("yprime_step must be 5 or 15")
        if self.test_size < 1:
            raise UsageError("gamma * l rounds to an empty test set")
        if self.empty_remainder_probability > EMPTY_REMAINDER_WARN:
            warnings.warn(
                f"the deletion check set is empty with probability {self.empty_remainder_probability:.3g}",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def test_size(self) -> int:
        return round_half_up(self.gamma * self.l)

    @property
    def gamma_l(self) -> float:
        return self.gamma * self.l

    @property
    def syndrome_bits(self) -> int:
        """Syndrome length before clamping to the key length."""
        return syndrome_length(self.eps, self.l, self.lam_ec)

    @property
    def empty_remainder_probability(self) -> float:
        """Pr[|S| <= |T|], which is when S \\ T can be empty."""
        return binom_cdf(self.test_size, self.l, 1 - self.alpha)

    def test_threshold(self, t: int) -> int:
        return int(math.ceil((1 - self.eps) * t - 1e-12))

    def deletion_threshold(self, k: int) -> int:
        return int(math.ceil((1 - 2 * self.eps) * k - 1e-12))

    def to_dict(self) -> dict:
        return asdict(self)
