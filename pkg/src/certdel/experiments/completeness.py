"""Honest-run experiments: abort probability, deletion acceptance and decryption."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from ..protocol import ProtocolParams, run_protocol
from ..rng import substream
from ..stats import Estimate
from .common import Metadata, run_trials


def completeness_bounds(params: ProtocolParams) -> dict:
    """Lower bound on p_top and upper bound on p_top (1 - p_ok|top) for honest parties."""
    g, l, e = params.gamma, params.l, params.eps
    p_top = (1 - 2 ** (-((1 - 2 * g) ** 2) * l / 8)) * (1 - 2 ** (-(e**2) * g * l / 8))
    return {"p_top_lower": p_top, "p_top_fail_upper": 2 * 2 ** (-2 * e**2 * g * l)}


def correctness_bound(params: ProtocolParams, p_top: float) -> float:
    """Lower bound on Pr[M~ = M | top] in the D=0 branch; vacuous (<= 0) when p_top is small."""
    g, l, e = params.gamma, params.l, params.eps
    if p_top <= 0:
        return -math.inf
    return 1 - (4 * 2 ** (-2 * e**2 * g * l) / p_top + params.lam_ec / 2)


def _s_distribution(params: ProtocolParams):
    s = np.arange(params.l + 1)
    return s, sps.binom.pmf(s, params.l, 1 - params.alpha)


def exact_abort_probability(params: ProtocolParams) -> float:
    """Exact Pr[O = bottom] for honest parties on noisy boxes.

    Each box wins independently with probability 1 - eps/2; the test runs on
    |T| boxes and needs ceil((1 - eps)|T|) wins, and |S| must exceed gamma l.
    """
    s, ps = _s_distribution(params)
    t = params.test_size
    pass_test = sps.binom.sf(params.test_threshold(t) - 1, t, 1 - params.eps / 2)
    return float(1 - ps[s > params.gamma_l].sum() * pass_test)


def exact_deletion_failure(params: ProtocolParams) -> float:
    """Exact p_top (1 - p_ok|top) for honest parties on noisy boxes."""
    s, ps = _s_distribution(params)
    t = params.test_size
    pass_test = sps.binom.sf(params.test_threshold(t) - 1, t, 1 - params.eps / 2)
    total = 0.0
    for size, p in zip(s, ps):
        if size <= params.gamma_l or p == 0:
            continue
        k = int(size - t)
        fail = sps.binom.cdf(params.deletion_threshold(k) - 1, k, 1 - params.eps / 2) if k > 0 else 0.0
        total += p * pass_test * fail
    return float(total)


def _message(params: ProtocolParams, master_seed: int) -> np.ndarray:
    return substream(master_seed, 0, "experiment").integers(0, 2, size=params.n).astype(np.uint8)


@dataclass
class CompletenessReport:
    p_top: dict
    p_top_fail: dict
    bounds: dict
    exact: dict
    verdict: dict
    metadata: dict

    def to_dict(self) -> dict:
        return asdict(self)


def completeness_experiment(params: ProtocolParams, trials: int, master_seed: int = 0, threads=None) -> CompletenessReport:
    """Honest D=1 runs; compares the empirical rates with the bounds and exact values."""
    m = _message(params, master_seed)

    def one(i):
        o = run_protocol(params, m, 1, master_seed=master_seed, trial_index=i).outcome
        return o.O, bool(o.O and not o.F)

    res = run_trials(one, trials, threads)
    top = Estimate.from_counts(sum(r[0] for r in res), trials)
    fail = Estimate.from_counts(sum(r[1] for r in res), trials)
    b = completeness_bounds(params)
    verdict = {
        "p_top_bound": top.upper >= b["p_top_lower"],
        "p_top_fail_bound": fail.lower <= b["p_top_fail_upper"],
    }
    verdict["passed"] = all(verdict.values())
    exact = {"p_top": 1 - exact_abort_probability(params), "p_top_fail": exact_deletion_failure(params)}
    return CompletenessReport(top.to_dict(), fail.to_dict(), b, exact, verdict, Metadata(master_seed, params.to_dict()).to_dict())


@dataclass
class CorrectnessReport:
    p_top: dict
    decrypt_given_top: dict
    bound: float
    verdict: dict
    decode_status: dict
    metadata: dict

    def to_dict(self) -> dict:
        return asdict(self)


def correctness_experiment(params: ProtocolParams, trials: int, master_seed: int = 0, threads=None) -> CorrectnessReport:
    """Honest D=0 runs; rate of M~ = M among non-aborted runs against the lower bound."""
    m = _message(params, master_seed)

    def one(i):
        o = run_protocol(params, m, 0, master_seed=master_seed, trial_index=i).outcome
        if not o.O:
            return False, False, None
        return True, bool(np.array_equal(o.M_tilde, m)), o.decode_report["status"]

    res = run_trials(one, trials, threads)
    n_top = sum(r[0] for r in res)
    top = Estimate.from_counts(n_top, trials)
    dec = Estimate.from_counts(sum(r[1] for r in res), max(n_top, 1))
    status = {}
    for r in res:
        if r[2] is not None:
            status[r[2]] = status.get(r[2], 0) + 1
    bound = correctness_bound(params, top.value)
    verdict = {"decrypt_bound": dec.upper >= bound, "bound_vacuous": bound <= 0}
    verdict["passed"] = verdict["decrypt_bound"]
    return CorrectnessReport(top.to_dict(), dec.to_dict(), bound, verdict, dict(sorted(status.items())),
                             Metadata(master_seed, params.to_dict()).to_dict())
