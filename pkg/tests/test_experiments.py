import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from certdel import qsim
from certdel.errors import ResourceError, UsageError
from certdel.experiments.attacks import (
    attack_suite,
    random_certificate_deletion_only,
    resolve_attack,
)
from certdel.experiments.calibration import (
    game_win_probability,
    otp_selftest_batch,
    reconciliation_experiment,
)
from certdel.experiments.common import run_trials
from certdel.experiments.completeness import (
    completeness_bounds,
    completeness_experiment,
    correctness_bound,
    correctness_experiment,
    exact_abort_probability,
    exact_deletion_failure,
)
from certdel.experiments.guessing import (
    classical_guessing,
    classical_guessing_bruteforce,
    deletion_key_guessing,
    guessing_probability,
)
from certdel.experiments.parameters import (
    ConstantsConfig,
    check_conditions,
    choose_parameters,
    gamma_numerator,
)
from certdel.experiments.serfling import (
    GENERATORS,
    exact_event_probability,
    serfling_bound,
    serfling_mc_check,
    worst_weight,
)
from certdel.protocol import ProtocolParams, run_protocol
from certdel.stats import binary_entropy

SMALL = ProtocolParams(n=4, l=40, alpha=0.25, gamma=0.2, eps=0.05)
LOOSE = ConstantsConfig(c_B=0.99, c_E=0.99, d_B=1.0, d_E=1.0)


class TestParameters:
    def test_gamma_numerator(self):
        assert gamma_numerator(1e-3, 1e-3, 1e-3) == pytest.approx(87.726, abs=1e-3)

    def test_entropy_value(self):
        assert binary_entropy(0.1) == pytest.approx(0.469, abs=1e-3)

    def test_defaults_infeasible(self):
        rep = choose_parameters(1e-3, 1e-3, 1e-3, 8, 0.05, 0.25)
        assert not rep.feasible and rep.binding == "alphaepsbnd"

    def test_feasible_round_trip(self):
        rep = choose_parameters(1e-3, 1e-3, 1e-3, 8, 0.001, 0.49, constants=LOOSE)
        assert rep.feasible and all(rep.flags.values())
        again = check_conditions(8, rep.l, 0.001, 0.49, 1e-3, 1e-3, 1e-3, LOOSE)
        assert again["gamma"] == pytest.approx(rep.gamma)
        below = check_conditions(8, rep.l - 1, 0.001, 0.49, 1e-3, 1e-3, 1e-3, LOOSE)
        assert not all(below[c] for c in ("gamma_below_half", "combound", "nbound_eve", "nbound_bob"))

    def test_validation(self):
        with pytest.raises(UsageError):
            choose_parameters(0, 1e-3, 1e-3, 8, 0.05, 0.25)
        with pytest.raises(UsageError):
            ConstantsConfig(c_B=-1)


class TestGuessing:
    @given(st.lists(st.integers(0, 9), min_size=6, max_size=6).filter(any))
    @settings(max_examples=60)
    def test_classical_matches_bruteforce(self, w):
        joint = np.array(w, dtype=float).reshape(2, 3)
        joint /= joint.sum()
        assert classical_guessing(joint) == pytest.approx(classical_guessing_bruteforce(joint))

    def test_zero_plus(self):
        rep = guessing_probability([0.5, 0.5], [qsim.ket("0").to_density(), qsim.plus_state().to_density()])
        assert rep.exact == pytest.approx(0.5 + math.sqrt(2) / 4)
        assert rep.lower <= rep.exact + 1e-12 <= rep.upper + 2e-12

    @given(st.integers(0, 2**31))
    @settings(max_examples=25, deadline=None)
    def test_bracket_on_random_states(self, seed):
        rng = np.random.default_rng(seed)
        states = [qsim.random_density(rng, 1) for _ in range(2)]
        p = rng.random()
        rep = guessing_probability([p, 1 - p], states)
        assert rep.lower - 1e-9 <= rep.exact <= rep.upper + 1e-9

    def test_too_large(self):
        with pytest.raises(ResourceError):
            guessing_probability([1.0], [qsim.maximally_mixed(3)])
        with pytest.raises(ResourceError):
            classical_guessing_bruteforce(np.full((4, 9), 1 / 36))

    def test_deleted_key_unguessable(self):
        vals = deletion_key_guessing()
        assert len(vals) == 18
        assert all(v == pytest.approx(0.5) for v in vals.values())


class TestSerfling:
    def test_worst_weight_below_bound(self):
        k, p = worst_weight(1000, 100, 0.1)
        assert p <= serfling_bound(1000, 0.1, 0.1)
        assert exact_event_probability(1000, 100, 0.1, k) == pytest.approx(p)

    @pytest.mark.parametrize("gen", sorted(GENERATORS))
    def test_generators_small(self, gen):
        rep = serfling_mc_check(200, 0.1, 0.1, gen, 3000, master_seed=1)
        assert rep.passed
        lo, hi = rep.frequency["value"] - rep.frequency["halfwidth"], rep.frequency["value"] + rep.frequency["halfwidth"]
        assert lo - 1e-12 <= rep.exact <= hi + 1e-12

    def test_unknown_generator(self):
        with pytest.raises(UsageError):
            serfling_mc_check(100, 0.1, 0.1, "nope", 10)


class TestCompleteness:
    def test_bounds_shape(self):
        b = completeness_bounds(ProtocolParams(n=8, l=600, alpha=0.25, gamma=0.1, eps=0.1))
        assert b["p_top_lower"] == pytest.approx(0.0507, abs=1e-3)
        assert b["p_top_fail_upper"] == pytest.approx(0.8706, abs=1e-3)

    def test_exact_abort_oracle(self):
        p = ProtocolParams(n=8, l=600, alpha=0.25, gamma=0.1, eps=0.1)
        assert 1 - exact_abort_probability(p) == pytest.approx(0.9703, abs=5e-4)
        assert exact_deletion_failure(p) < 1e-20

    def test_eps_zero_abort_is_binomial(self):
        p = ProtocolParams(n=4, l=40, alpha=0.25, gamma=0.2, eps=0.0)
        assert exact_abort_probability(p) == pytest.approx(binom.cdf(8, 40, 0.75))

    def test_small_experiment(self):
        rep = completeness_experiment(SMALL, 300, master_seed=3)
        top = rep.p_top
        assert top["value"] - top["halfwidth"] <= rep.exact["p_top"] <= top["value"] + top["halfwidth"]
        assert rep.verdict["p_top_bound"] and rep.verdict["p_top_fail_bound"]

    def test_correctness_small(self):
        rep = correctness_experiment(SMALL, 300, master_seed=4)
        assert rep.verdict["decrypt_bound"]
        assert correctness_bound(SMALL, 0.9) < 0  # vacuous at this size

    def test_flag_independent_of_message(self):
        a, b = np.ones(4, dtype=np.uint8), np.zeros(4, dtype=np.uint8)
        for i in range(20):
            oa = run_protocol(SMALL, a, 1, master_seed=5, trial_index=i).outcome
            ob = run_protocol(SMALL, b, 1, master_seed=5, trial_index=i).outcome
            assert (oa.O, oa.F) == (ob.O, ob.F)


class TestAttacks:
    def test_names(self):
        assert resolve_attack("measure-early-keep-key") == "measure-early"
        with pytest.raises(UsageError):
            resolve_attack("teleport")

    def test_deletion_only_oracle(self):
        rep = random_certificate_deletion_only(trials=20_000, master_seed=1)
        assert rep.threshold == 54
        assert rep.acceptance["successes"] == 0
        assert rep.oracle == pytest.approx(binom.sf(53, 60, 0.5))
        assert abs(rep.round_match["value"] - 0.5) < 0.01

    def test_random_certificate_rejected(self):
        rep = attack_suite(SMALL, "random-certificate", 60, master_seed=2)
        assert rep.acceptance["successes"] == 0 and rep.monotone

    def test_measure_early_round_rate(self):
        rep = attack_suite(SMALL, "measure-early", 60, master_seed=3)
        assert rep.per_round["oracle"] == pytest.approx(2 / 3)
        assert rep.per_round["within_ci"]


class TestCalibration:
    def test_ideal_boxes_never_lose(self):
        rep = game_win_probability(0.0, 5000, device="quantum")
        assert rep.win["successes"] == 5000

    def test_noisy_rate(self):
        rep = game_win_probability(0.2, 20_000, master_seed=2)
        assert abs(rep.win["value"] - 0.9) < 0.01

    def test_reconciliation_small(self):
        rep = reconciliation_experiment(trials=300, master_seed=1)
        assert rep.failure["value"] <= 0.01 + rep.failure["halfwidth"]
        assert rep.zero_error_exact

    def test_otp_selftest(self):
        assert otp_selftest_batch(s=3, samples=5)["passed"]


class TestCommon:
    def test_thread_count_irrelevant(self):
        f = lambda i: np.random.default_rng(i).integers(1 << 30)
        assert run_trials(f, 50, 1) == run_trials(f, 50, 4)
