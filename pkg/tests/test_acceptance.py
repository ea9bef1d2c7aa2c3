"""End-to-end acceptance checks, one per criterion.

Each test prints a single PASS/FAIL line (visible in ``pytest -v`` output)
before asserting.
"""

import subprocess
import sys
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import binom

from certdel.composable import DISTINGUISHERS, estimate_advantage, exhaustive_pad_comparison
from certdel.crypto import toeplitz_collision_table
from certdel.devices import grid_invariant_errors, measure_early_acceptance
from certdel.experiments.attacks import attack_suite, random_certificate_deletion_only
from certdel.experiments.calibration import game_win_probability, otp_selftest_batch, reconciliation_experiment
from certdel.experiments.completeness import completeness_experiment, correctness_experiment
from certdel.experiments.serfling import GENERATORS, serfling_mc_check
from certdel.games import classical_value_bruteforce
from certdel.protocol import ProtocolParams, run_protocol
from certdel.rng import substream
from certdel.stats import Estimate
from cli_cases import CASES

pytestmark = pytest.mark.acceptance

FULL = dict(n=8, l=600, alpha=0.25, gamma=0.1, eps=0.1)
SMALL = dict(n=4, l=40, alpha=0.25, gamma=0.2, eps=0.05)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_01_classical_value(report):
    t = time.perf_counter()
    v = classical_value_bruteforce()
    dt = time.perf_counter() - t
    report(1, v.value == Fraction(8, 9) and v.strategy_pairs == 4096 and dt < 1.0,
           f"value={v.value} pairs={v.strategy_pairs} time={dt:.3f}s")


def test_02_ideal_strategy_never_loses(report):
    t = time.perf_counter()
    r = game_win_probability(0.0, 100_000, master_seed=2, device="quantum")
    dt = time.perf_counter() - t
    losses = int(np.sum(r.losses_by_input))
    report(2, losses == 0 and r.win["successes"] == 100_000 and dt < 30, f"losses={losses} time={dt:.1f}s")


def test_03_grid_invariants(report):
    err = grid_invariant_errors()
    report(3, max(err.values()) <= 1e-9, f"max deviations {err}")


def test_04_noisy_calibration(report):
    r = game_win_probability(0.1, 100_000, master_seed=4)
    report(4, abs(r.win["value"] - 0.95) <= 0.003, f"win={r.win['value']:.5f} target 0.95 +- 0.003")


def test_05_completeness(report):
    t = time.perf_counter()
    r = completeness_experiment(ProtocolParams(**FULL), 10_000, master_seed=5)
    dt = time.perf_counter() - t
    ok = r.verdict["p_top_bound"] and r.verdict["p_top_fail_bound"] and dt < 600
    report(5, ok, f"p_top={r.p_top['value']:.4f} (lower bound {r.bounds['p_top_lower']:.4f}, exact {r.exact['p_top']:.4f}) "
                  f"p_top_fail={r.p_top_fail['value']:.2e} (upper bound {r.bounds['p_top_fail_upper']:.4f}) time={dt:.0f}s")


def test_06_correctness(report):
    r = correctness_experiment(ProtocolParams(**FULL), 10_000, master_seed=6)
    report(6, r.verdict["decrypt_bound"],
           f"decrypt|top={r.decrypt_given_top['value']:.4f} required >= {r.bound:.4f} p_top={r.p_top['value']:.4f}")


def test_07_eps_zero_abort_oracle(report):
    # small l so that |S| <= gamma l is not negligible
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = ProtocolParams(n=2, l=16, alpha=0.49, gamma=0.25, eps=0.0)
    trials = 10_000
    m = substream(7, 0, "experiment").integers(0, 2, size=p.n).astype(np.uint8)
    aborts = sum(not run_protocol(p, m, 0, master_seed=7, trial_index=i).outcome.O for i in range(trials))
    est = Estimate.from_counts(aborts, trials)
    oracle = float(binom.cdf(int(np.floor(p.gamma * p.l)), p.l, 1 - p.alpha))
    report(7, est.contains(oracle), f"abort={est.value:.4f} +- {est.halfwidth:.4f} oracle={oracle:.4f}")


def test_08_serfling(report):
    lines, ok = [], True
    for gen in sorted(GENERATORS):
        r = serfling_mc_check(1000, 0.1, 0.1, gen, 100_000, master_seed=8)
        ok &= r.passed
        lines.append(f"{gen}={r.frequency['value']:.4f}")
    report(8, ok, f"bound=0.25 " + " ".join(lines))


def test_09_otp_symmetry(report):
    r = otp_selftest_batch(s=3, samples=20, master_seed=9)
    report(9, r["passed"] and len(r["equal"]) == 20, f"{sum(r['equal'])}/20 exact equalities")


def test_10_reconciliation(report):
    r = reconciliation_experiment(60, 0.05, 0.01, 10_000, master_seed=10)
    ok = r.failure["lower"] <= 0.01 and r.zero_error_exact
    report(10, ok, f"failure={r.failure['value']:.4f} +- {r.failure['halfwidth']:.4f} "
                   f"zero-error exact={r.zero_error_exact} r={r.syndrome_bits} radius={r.radius}")


def test_11_two_universality(report):
    table = toeplitz_collision_table(8, 3)
    off = table[~np.eye(table.shape[0], dtype=bool)]
    report(11, off.max() <= 1 / 8, f"max collision={off.max()} over {off.size} ordered pairs")


def test_12_message_independence(report):
    p = ProtocolParams(**FULL)
    m = substream(12, 0, "experiment").integers(0, 2, size=p.n).astype(np.uint8)
    zero = np.zeros(p.n, dtype=np.uint8)
    diffs = 0
    for seed in range(1000):
        d = seed % 2
        a = run_protocol(p, m, d, master_seed=seed).outcome
        b = run_protocol(p, zero, d, master_seed=seed).outcome
        diffs += (a.O, a.F) != (b.O, b.F)
    report(12, diffs == 0, f"{diffs} differing (O, F) pairs over 1000 seeds")


def test_13_simulator_fidelity(report):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = ProtocolParams(n=3, l=6, alpha=0.25, gamma=0.09, eps=0.1)
    m = np.array([1, 0, 1], dtype=np.uint8)
    exact = exhaustive_pad_comparison(p, m, 0, range(200))
    advs = {name: estimate_advantage("bob+eve", p, cls(d=0), 2000, master_seed=13) for name, cls in DISTINGUISHERS.items()}
    ok = exact["equal"] and all(r.advantage <= r.ci_halfwidth for r in advs.values())
    detail = " ".join(f"{k}={r.advantage:.4f}" for k, r in advs.items())
    report(13, ok, f"exhaustive equal={exact['equal']} over {exact['seeds']} seeds; advantages {detail} "
                   f"(ci {next(iter(advs.values())).ci_halfwidth:.4f})")


def test_14_attacks(report):
    rc = random_certificate_deletion_only(rounds=60, eps=0.05, trials=100_000, master_seed=14)
    me = attack_suite(ProtocolParams(**SMALL), "measure-early", 1000, master_seed=14)
    per = me.per_round
    oracle = measure_early_acceptance()
    ok = (rc.acceptance["successes"] == 0 and per["within_ci"] and per["oracle"] == pytest.approx(oracle)
          and per["estimate"]["upper"] < 1 and me.acceptance["upper"] < 1)
    report(14, ok, f"random-certificate accepted {rc.acceptance['successes']}/100000 (oracle {rc.oracle:.2e}); "
                   f"measure-early per-round {per['estimate']['value']:.4f} oracle {oracle:.4f}, "
                   f"acceptance {me.acceptance['value']:.4f}")


def test_15_cli_determinism(report, tmp_path):
    differing = []
    for name, argv in CASES.items():
        outs = [subprocess.run([sys.executable, "-m", "certdel.cli", *argv, "--seed", "15"], capture_output=True).stdout
                for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            differing.append(name)
    report(15, not differing, f"{len(CASES) - len(differing)}/{len(CASES)} subcommands byte-identical")
