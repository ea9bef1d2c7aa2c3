import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certdel.devices import NoisyBoxArray, QuantumBoxArray
from certdel.errors import ProtocolOrderError, UsageError
from certdel.protocol import (
    TIME_TAGS,
    Event,
    HonestBob,
    ProtocolParams,
    RandomCertificateBob,
    SabotageBob,
    Transcript,
    alice_deletion_test,
    alice_test_phase1,
    draw_source,
    run_protocol,
)
from certdel.protocol.roles import BobRole
from certdel.rng import substream
from certdel.stats import Estimate, binom_cdf, total_variation

SMALL = dict(n=4, l=40, alpha=0.25, gamma=0.2, eps=0.05)


def small(**kw):
    return ProtocolParams(**{**SMALL, **kw})


def message(n, seed=0):
    return substream(seed, 0, "experiment").integers(0, 2, size=n).astype(np.uint8)


class TestParams:
    def test_ranges(self):
        for bad in (dict(alpha=0.5), dict(gamma=0.0), dict(eps=1.0), dict(lam_ec=0.0), dict(n=42), dict(l=4)):
            with pytest.raises(UsageError):
                small(**bad)

    def test_test_size_rounds_half_up(self):
        assert small(l=45, gamma=0.1).test_size == 5  # 4.5 rounds up
        assert small(l=44, gamma=0.1).test_size == 4

    def test_thresholds(self):
        p = small(eps=0.1)
        assert p.test_threshold(10) == 9
        assert p.deletion_threshold(60) == 48
        assert p.test_threshold(30) == 27

    def test_empty_remainder_warning(self):
        with pytest.warns(RuntimeWarning):
            ProtocolParams(n=2, l=26, alpha=0.45, gamma=0.3, eps=0.1)


class TestAliceTests:
    def test_boundary_inclusive(self):
        p = small(eps=0.1)  # |T| = 8, threshold ceil(7.2) = 8
        x = np.zeros(8, dtype=int)
        y = np.zeros(8, dtype=int)
        a = np.zeros((8, 3), dtype=np.uint8)
        b = np.tile(np.array([0, 0, 1], dtype=np.uint8), (8, 1))
        ok, matches, thr = alice_test_phase1(p, a, b, x, y, s_size=30)
        assert ok and matches == thr == 8
        b[0] = [1, 0, 0]
        assert not alice_test_phase1(p, a, b, x, y, s_size=30)[0]

    def test_small_s_aborts(self):
        p = small()
        a = np.zeros((8, 3), dtype=np.uint8)
        b = np.tile(np.array([0, 0, 1], dtype=np.uint8), (8, 1))
        assert not alice_test_phase1(p, a, b, np.zeros(8, int), np.zeros(8, int), s_size=8)[0]

    def test_empty_deletion_set_passes(self):
        ok, m, thr = alice_deletion_test(small(), np.zeros((0, 3)), np.zeros((0, 3)), [], [])
        assert ok and m == thr == 0


class TestSource:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_structure(self, seed):
        p = small()
        src = draw_source(p, substream(seed, 0, "source"))
        assert len(src.T) == p.test_size
        if src.S.sum() > p.gamma_l:
            assert src.S[src.T].all()
        rest = np.setdiff1d(np.arange(p.l), src.T)
        assert np.all(src.yprime[rest] != src.y[rest])
        assert np.all(src.yprime[src.T] == -1)


class TestRun:
    def test_honest_decrypts(self):
        p = small()
        m = message(p.n)
        ok = 0
        for i in range(40):
            o = run_protocol(p, m, 0, master_seed=1, trial_index=i).outcome
            assert (o.M_tilde is not None) == o.O and o.F is None
            ok += bool(o.O and np.array_equal(o.M_tilde, m))
        assert ok >= 30

    def test_deletion_gives_zero_output(self):
        p = small()
        m = message(p.n)
        for i in range(30):
            o = run_protocol(p, m, 1, master_seed=2, trial_index=i).outcome
            assert (o.F is not None) == o.O
            if o.O:
                assert not o.M_tilde.any()

    def test_ideal_boxes_always_pass_deletion(self):
        p = small(eps=0.05)
        for i in range(10):
            o = run_protocol(p, message(p.n), 1, device=QuantumBoxArray(), master_seed=3, trial_index=i).outcome
            if o.O:
                assert o.F and o.match_counts["deletion"]["matches"] == o.match_counts["deletion"]["size"]

    def test_transcript_order_and_eve_copies(self):
        p = small()
        for bob in (HonestBob(), SabotageBob(), RandomCertificateBob()):
            for d in (0, 1):
                res = run_protocol(p, message(p.n), d, bob=bob, master_seed=4)
                tr = res.transcript
                assert tr.is_ordered()
                chan = tr.channel_messages()
                assert len(chan) == len(tr.eve_view)
                for sent, seen in zip(chan, tr.eve_view):
                    assert np.array_equal(sent.payload_bits(), seen.payload_bits())
                assert tr.events[-1].time_tag in ("t5'", "t5")

    def test_abort_still_reveals_without_keys(self):
        res = run_protocol(small(), message(4), 0, bob=SabotageBob(), master_seed=5)
        assert not res.outcome.O
        last = res.transcript.events[-1]
        assert last.time_tag == "t5'" and last.receiver == "all"
        assert "u1" not in last.fields

    def test_record_rejects_backwards_time(self):
        tr = Transcript()
        tr.record(Event("t2", "Alice", "Bob", "x"))
        with pytest.raises(ProtocolOrderError):
            tr.record(Event("t1", "Alice", "Bob", "y"))
        with pytest.raises(ProtocolOrderError):
            tr.record(Event("t9", "Alice", "Bob", "y"))
        assert TIME_TAGS.index("t3_dot") < TIME_TAGS.index("t4'")

    def test_role_stage_checks(self):
        bob = HonestBob()
        bob.start(small(), NoisyBoxArray(0.0), np.random.default_rng(0))
        with pytest.raises(ProtocolOrderError):
            bob.on_ciphertext(np.zeros(4), np.zeros(4))

    def test_malformed_answers_lose(self):
        class Mute(BobRole):
            def on_test(self, T, y_T, yprime=None):
                self._advance(("start",), "test")
                return np.zeros((1, 1))

        o = run_protocol(small(), message(4), 0, bob=Mute(), master_seed=6).outcome
        assert not o.O and o.match_counts["test"]["matches"] == 0

    def test_sabotage_aborts(self):
        aborted = sum(not run_protocol(small(), message(4), 0, bob=SabotageBob(), master_seed=7, trial_index=i).outcome.O
                      for i in range(30))
        assert aborted >= 28

    def test_early_yprime_variant(self):
        p = small(yprime_step=5)
        outs = [run_protocol(p, message(4), 1, master_seed=8, trial_index=i).outcome for i in range(20)]
        accepted = [o for o in outs if o.O]
        assert len(accepted) >= 12 and all(o.F for o in accepted)

    def test_message_length_checked(self):
        with pytest.raises(UsageError):
            run_protocol(small(), np.zeros(3, dtype=np.uint8), 0)
        with pytest.raises(UsageError):
            run_protocol(small(), message(4), 2)

    def test_seeded_runs_are_reproducible(self):
        a = run_protocol(small(), message(4), 0, master_seed=9).transcript.to_dict()
        b = run_protocol(small(), message(4), 0, master_seed=9).transcript.to_dict()
        assert a == b

    def test_outcome_json_fields(self):
        d = run_protocol(small(), message(4), 1, master_seed=10).outcome.to_dict()
        assert {"O", "F", "M_tilde_hex", "match_counts", "decode_report", "seed"} <= set(d)

    def test_eps_zero_abort_matches_binomial(self):
        p = small(eps=0.0)
        n = 4000
        aborts = sum(not run_protocol(p, message(4), 0, master_seed=11, trial_index=i).outcome.O for i in range(n))
        assert Estimate.from_counts(aborts, n).contains(binom_cdf(math.floor(p.gamma_l), p.l, 1 - p.alpha))


class TestOrderIndependence:
    N = 20_000

    def test_phase3_query_order(self):
        # outcome law of honest Bob must not depend on how he batches his queries
        p = ProtocolParams(n=2, l=12, alpha=0.25, gamma=0.2, eps=0.2)
        m = np.array([1, 0], dtype=np.uint8)

        def law(order):
            counts = np.zeros(3)
            for i in range(self.N):
                o = run_protocol(p, m, 0, bob=HonestBob(order), master_seed=12, trial_index=i).outcome
                counts[0 if not o.O else (1 if np.array_equal(o.M_tilde, m) else 2)] += 1
            return counts / self.N

        base = law("split")
        for order in ("together", "reversed"):
            assert total_variation(base, law(order)) <= 0.01
