import csv
import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certdel.composable import (
    CASES,
    DISTINGUISHERS,
    AdvantageReport,
    ConstantDistinguisher,
    IdealEcd,
    MTildeChecker,
    AbortWatcher,
    estimate_advantage,
    exhaustive_pad_comparison,
    ideal_run,
    ideal_system,
    real_system,
    reports_to_csv,
)
from certdel.errors import ProtocolOrderError, UsageError
from certdel.protocol import ProtocolParams, SabotageBob, RandomCertificateBob


def tiny():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return ProtocolParams(n=3, l=6, alpha=0.25, gamma=0.09, eps=0.1)


def small():
    return ProtocolParams(n=4, l=40, alpha=0.25, gamma=0.2, eps=0.05)


class TestIdealFunctionality:
    @given(st.lists(st.integers(0, 1), min_size=5, max_size=5), st.integers(0, 1))
    @settings(max_examples=40)
    def test_all_honest_deterministic(self, bits, d):
        m = np.array(bits, dtype=np.uint8)
        out = ideal_run("none", 5, m, d)
        assert out["O"] is True
        if d == 0:
            assert out["F"] is None and np.array_equal(out["M_tilde"], m)
        else:
            assert out["F"] is True and not out["M_tilde"].any()

    def test_bob_abort_stops_everything(self):
        out = ideal_run("bob", 3, [1, 1, 1], 0, o_b=False)
        assert out == {"O": False, "F": None, "M_tilde": None, "D": None}

    def test_abort_needs_one_party(self):
        assert not ideal_run("bob+eve", 2, [1, 0], 1, o_b=True, o_e=False)["O"]

    def test_failed_flag_returns_message(self):
        out = ideal_run("bob", 3, [1, 0, 1], 1, f=False)
        assert out["F"] is False and list(out["M_tilde"]) == [1, 0, 1]
        out = ideal_run("bob", 3, [1, 0, 1], 1, f=True)
        assert not out["M_tilde"].any()

    def test_order_enforced(self):
        ideal = IdealEcd("bob", 2)
        with pytest.raises(ProtocolOrderError):
            ideal.input_message([0, 1])
        ideal.output_O()
        ideal.input_message([0, 1])
        with pytest.raises(ProtocolOrderError):
            ideal.input_flag(True)
        ideal.input_deletion(1)
        with pytest.raises(ProtocolOrderError):
            ideal.output_F()

    def test_post_abort_refused(self):
        ideal = IdealEcd("eve", 2)
        ideal.abort_inputs(True, False)
        assert ideal.output_O() is False
        with pytest.raises(ProtocolOrderError):
            ideal.input_message([0, 0])

    def test_honest_parties_cannot_abort_or_flag(self):
        with pytest.raises(UsageError):
            IdealEcd("eve", 2).abort_inputs(o_b=False)
        with pytest.raises(UsageError):
            IdealEcd("wrong", 2)
        ideal = IdealEcd("none", 2)
        ideal.output_O()
        ideal.input_message([0, 0])
        ideal.input_deletion(1)
        with pytest.raises(UsageError):
            ideal.input_flag(True)


class TestSimulator:
    def test_all_honest_is_identity(self):
        p = small()
        m = np.array([1, 0, 1, 1], dtype=np.uint8)
        rv, _ = real_system("none", p, m, 0, master_seed=3)
        iv, _ = ideal_system("none", p, m, 0, master_seed=3)
        assert (rv.O, rv.F) == (iv.O, iv.F)
        assert np.array_equal(rv.bob_output, iv.bob_output)

    def test_reveal_patched_for_deletion(self):
        # after a valid certificate Bob recovers 0^n from the simulated reveal
        p = small()
        m = np.ones(4, dtype=np.uint8)
        for seed in range(8):
            view, res = ideal_system("bob+eve", p, m, 1, master_seed=seed)
            if view.O and view.F:
                assert not view.bob_output.any()

    def test_reveal_patched_with_message(self):
        p = small()
        m = np.array([1, 1, 0, 1], dtype=np.uint8)
        hits = 0
        for seed in range(8):
            view, _ = ideal_system("bob+eve", p, m, 0, master_seed=seed)
            if view.O:
                hits += np.array_equal(view.bob_output, m)
        assert hits >= 5

    def test_abort_propagates(self):
        view, _ = ideal_system("bob", small(), np.zeros(4, dtype=np.uint8), 0, bob=SabotageBob(), master_seed=1)
        assert view.O is False and view.F is None

    @pytest.mark.parametrize("d", [0, 1])
    def test_exhaustive_pad_comparison(self, d):
        res = exhaustive_pad_comparison(tiny(), np.array([1, 0, 1], dtype=np.uint8), d, range(6))
        assert res["equal"], res["mismatched"]

    def test_exhaustive_with_cheating_bob(self):
        res = exhaustive_pad_comparison(tiny(), np.array([0, 1, 1], dtype=np.uint8), 0, range(4),
                                        bob_factory=RandomCertificateBob)
        assert res["equal"]


class TestAdvantage:
    def test_constant_is_exactly_zero(self):
        r = estimate_advantage("bob+eve", small(), ConstantDistinguisher(), 50, master_seed=2)
        assert r.advantage == 0.0 and r.p_real == r.p_ideal == 1.0

    def test_abort_watcher_bounded(self):
        r = estimate_advantage("none", small(), AbortWatcher(d=0), 150, master_seed=4)
        assert r.advantage <= r.ci_halfwidth

    def test_m_tilde_checker_honest(self):
        r = estimate_advantage("none", small(), MTildeChecker(d=0), 150, master_seed=5)
        assert r.advantage <= r.ci_halfwidth

    def test_library_names(self):
        assert set(DISTINGUISHERS) == {"constant", "abort-watcher", "m-tilde-checker", "flag-correlator",
                                       "transcript-hasher"}
        assert set(CASES) == {"none", "eve", "bob", "bob+eve"}

    def test_unknown_case(self):
        with pytest.raises(UsageError):
            estimate_advantage("alice", small(), ConstantDistinguisher(), 1)

    def test_csv_columns(self):
        rep = AdvantageReport("constant", "bob", 10, 0.5, 0.25, 0.25, 0.1)
        rows = list(csv.reader(io.StringIO(reports_to_csv([rep]))))
        assert rows[0] == ["distinguisher_name", "case", "trials", "p_real", "p_ideal", "advantage", "ci_halfwidth"]
        assert rows[1][:3] == ["constant", "bob", "10"] and rows[1][5] == "0.250000"

    def test_threads_do_not_change_result(self):
        a = estimate_advantage("eve", small(), MTildeChecker(), 20, master_seed=6, threads=1)
        b = estimate_advantage("eve", small(), MTildeChecker(), 20, master_seed=6, threads=3)
        assert a == b
