"""Ekert sessions: sifting, CHSH, QBER and transcripts."""
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from qkdhorse.channel import ChannelConfig
from qkdhorse.protocol import (
    CorrelationEstimate, SessionConfig, SessionTranscript, chsh, estimate_correlation,
    qber, run_session, sift)
from qkdhorse.protocol.transcript import (
    dumps_transcript, export_transcript, import_transcript, loads_transcript,
    merge_transcripts, private_view)
from qkdhorse.utils import Outcome, Role, Setting
from qkdhorse.utils.errors import (
    EmptyCell, EmptyKey, FormatError, IncompleteTranscript, LengthMismatch)

S_QUANTUM = 2 * math.sqrt(2)
S_TABLES  = 970 / 343


class TestSessionConfig:
    def test_trojan_needs_tables(self):
        with pytest.raises(ValueError):
            SessionConfig(channel=ChannelConfig(backend='trojan'))

    def test_rounds(self):
        with pytest.raises(ValueError):
            SessionConfig(rounds=0)

    def test_seed_expansion(self):
        one, two = SessionConfig.from_seed(5), SessionConfig.from_seed(5)
        assert one.alice_seed == two.alice_seed != one.bob_seed
        assert one.channel.seed not in (one.alice_seed, one.bob_seed)
        assert SessionConfig.from_seed(6).alice_seed != one.alice_seed


class TestSessions:
    def test_trojan_statistics(self, trojan_transcript):
        summary = trojan_transcript.summary()
        assert summary['singles_rate_a'] == pytest.approx(6624 / 8000, abs=0.005)
        assert summary['singles_rate_b'] == pytest.approx(6624 / 8000, abs=0.005)
        assert summary['pair_rate'] == pytest.approx(5488 / 8000, abs=0.005)
        assert summary['qber'] == 0.0
        report = trojan_transcript.chsh_report
        assert report.s_value == pytest.approx(S_TABLES, abs=3 * report.std_err)
        assert report.violated

    def test_honest_statistics(self, honest_transcript):
        assert honest_transcript.singles_rate(Role.ALICE) == 1.0
        assert honest_transcript.qber == 0.0
        report = honest_transcript.chsh_report
        assert report.s_value == pytest.approx(S_QUANTUM, abs=3 * report.std_err)
        assert not honest_transcript.trojan.any()

    @pytest.mark.slow
    def test_lookup_noise(self, make_session):
        q = 0.025
        transcript = make_session('trojan', seed=11, rounds=400_000, noise_q=q)
        expected = 2 * q * (1 - q)
        sigma = math.sqrt(expected * (1 - expected) / len(transcript.key_a))
        assert transcript.qber == pytest.approx(expected, abs=3 * sigma)
        report = transcript.chsh_report
        assert report.s_value == pytest.approx((1 - 2 * q) ** 2 * S_TABLES, abs=3 * report.std_err)
        assert report.violated

    def test_key_yield(self, trojan_transcript):
        assert len(trojan_transcript.key_a) / len(trojan_transcript) == pytest.approx(0.686 / 4, abs=0.005)
        assert trojan_transcript.key_a == trojan_transcript.key_b

    def test_exhaustive_sweep(self, make_session):
        transcript = make_session('trojan', rounds=16 * 8000,
            slot_policy='cyclic', setting_policy='sweep')
        for (j, k), cell in transcript.grid.items():
            assert cell.total == 5488
            assert cell.n_diff == [0, 804, 2744, 4684][abs(j - k)]
        assert transcript.chsh_report.s_exact == Fraction(970, 343)

    def test_dormant_trojan_is_honest(self, make_session):
        transcript = make_session('trojan', rounds=20_000, activate_at=None)
        assert not transcript.trojan.any()
        assert transcript.singles_rate(Role.BOB) == 1.0

    def test_activation_midway(self, make_session):
        transcript = make_session('trojan', rounds=20_000, activate_at=5_000)
        assert not transcript.trojan[:5_000].any()
        assert transcript.trojan[5_000:].all()
        assert transcript.detected(Role.ALICE)[:5_000].all()

    def test_deterministic(self, make_session):
        one = make_session('trojan-masked', rounds=5_000, noise_q=0.02)
        two = make_session('trojan-masked', rounds=5_000, noise_q=0.02)
        assert dumps_transcript(one) == dumps_transcript(two)

    def test_chsh_fraction(self, make_session):
        transcript = make_session('honest', rounds=40_000, chsh_fraction=0.25)
        assert transcript.chsh_sample.mean() == pytest.approx(0.25, abs=0.01)
        full = sum(cell.total for cell in transcript.grid.values())
        assert full == pytest.approx(0.25 * 40_000, rel=0.05)

    def test_sift_matches_columns(self, make_session):
        transcript = make_session('trojan', rounds=3_000)
        key_a, key_b, subsets = sift(transcript.messages(),
            transcript.records(Role.ALICE), transcript.records(Role.BOB))
        assert key_a == transcript.key_a
        assert key_b == transcript.key_b
        assert set(subsets) == {
            (Setting.ALPHA, Setting.BETA), (Setting.GAMMA, Setting.BETA),
            (Setting.GAMMA, Setting.DELTA), (Setting.ALPHA, Setting.DELTA),
        }


class TestStatistics:
    def test_estimate(self):
        est = estimate_correlation((Setting.ALPHA, Setting.BETA),
            [Outcome.ONE, Outcome.ZERO, Outcome.NO_DETECT, 1], [1, 1, 0, 1])
        assert (est.n_same, est.n_diff) == (2, 1)
        assert est.e_value == Fraction(1, 3)
        assert est.label == 'αβ'

    def test_empty_cell(self):
        with pytest.raises(EmptyCell):
            CorrelationEstimate((Setting.ALPHA, Setting.BETA), 0, 0)

    def test_chsh_exact(self):
        e = Fraction(3880, 5488)
        report = chsh(e, e, e, -e)
        assert report.s_exact == Fraction(970, 343)
        assert report.violated

    def test_chsh_floats(self):
        r = 1 / math.sqrt(2)
        report = chsh(r, r, r, -r)
        assert report.s_value == pytest.approx(S_QUANTUM)
        assert report.s_exact is None

    def test_qber(self):
        assert qber([0, 1, 1, 0], [0, 1, 0, 0]) == 0.25
        with pytest.raises(EmptyKey):
            qber([], [])
        with pytest.raises(LengthMismatch):
            qber([0], [0, 1])


class TestTranscriptFile:
    @pytest.fixture(scope='class')
    def small(self, make_session):
        return make_session('trojan', rounds=2_000, eta=0.9)

    def test_line_format(self, small):
        first = dumps_transcript(small).split('\n')[0]
        assert list(json.loads(first)) == ['q', 'slot', 'sa', 'sb', 'oa', 'ob']
        assert ' ' not in first
        assert first.startswith('{"q":0,"slot":')

    def test_export_import(self, tmp_path, small):
        path = tmp_path / 'session.ndjson'
        export_transcript(small, path)
        loaded = import_transcript(path, n_slots=8000)
        for name in ('seqs', 'slots', 'settings_a', 'settings_b', 'outcomes_a', 'outcomes_b'):
            assert np.array_equal(getattr(loaded, name), getattr(small, name))
        assert loaded.key_a == small.key_a
        assert path.read_bytes().endswith(b'}\n')

    @pytest.mark.parametrize('line, reason', [
        ('{"q":0,"slot":1,"sa":0,"sb":0,"oa":"0"}', 'keys'),
        ('{"q":0,"slot":1,"sa":0,"sb":0,"oa":"0","ob":"1","x":1}', 'keys'),
        ('{"q":true,"slot":1,"sa":0,"sb":0,"oa":"0","ob":"1"}', 'integer'),
        ('{"q":0,"slot":1,"sa":4,"sb":0,"oa":"0","ob":"1"}', 'range'),
        ('{"q":0,"slot":1,"sa":0,"sb":0,"oa":"2","ob":"1"}', 'one of'),
        ('[1,2]', 'keys'),
        ('{"q":0,', 'json'),
    ])
    def test_strict_lines(self, line, reason):
        with pytest.raises(FormatError) as err:
            loads_transcript([line])
        assert err.value.line == 1
        assert reason in err.value.reason

    def test_order(self):
        lines = [
            '{"q":3,"slot":1,"sa":0,"sb":0,"oa":"0","ob":"0"}',
            '{"q":3,"slot":2,"sa":0,"sb":0,"oa":"0","ob":"0"}',
        ]
        with pytest.raises(FormatError) as err:
            loads_transcript(lines)
        assert err.value.line == 2

    def test_missing_slot(self):
        transcript = loads_transcript(['{"q":0,"slot":null,"sa":1,"sb":1,"oa":".","ob":"?"}'])
        assert transcript.slots[0] == -1
        assert dumps_transcript(transcript).startswith('{"q":0,"slot":null')


class TestReceiverViews:
    def test_merge(self, make_session):
        full  = make_session('trojan', rounds=2_000)
        alice = private_view(full, Role.ALICE)
        bob   = private_view(full, Role.BOB)
        with pytest.raises(IncompleteTranscript):
            alice.grid
        merged = merge_transcripts(alice, bob)
        assert np.array_equal(merged.outcomes_a, full.outcomes_a)
        assert np.array_equal(merged.outcomes_b, full.outcomes_b)
        assert merged.qber == full.qber

    def test_view_keeps_public_data(self, make_session):
        full  = make_session('trojan', rounds=2_000)
        alice = private_view(full, Role.ALICE)
        assert alice.key_a == full.key_a
        assert alice.summary()['chsh'] is None

    def test_merge_mismatch(self, make_session):
        one = make_session('trojan', rounds=1_000, seed=1)
        two = make_session('trojan', rounds=1_000, seed=2)
        with pytest.raises(IncompleteTranscript):
            merge_transcripts(private_view(one, Role.ALICE), private_view(two, Role.BOB))

    def test_merge_wrong_sides(self, make_session):
        full = make_session('trojan', rounds=1_000)
        with pytest.raises(IncompleteTranscript):
            merge_transcripts(private_view(full, Role.BOB), private_view(full, Role.ALICE))

    def test_column_lengths(self):
        with pytest.raises(IncompleteTranscript):
            SessionTranscript(np.arange(3), np.arange(2), np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))
