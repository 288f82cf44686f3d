"""Translation tables: targets, lookup, generation and verification."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qkdhorse.tables import (
    TablePair, TableTargets, TranslationTable, band, derive_targets,
    generate_tables, lookup, lookup_many, plan_fibers, verify_tables)
from qkdhorse.tables.verify import sweep_counts
from qkdhorse.utils import NO_DETECT, ONE, ZERO, Outcome, Role, Setting
from qkdhorse.utils.errors import (
    InfeasibleTargets, LengthMismatch, MismatchedSizes, NotMultipleOf8000,
    RoleMissing, SearchExhausted, SlotOutOfRange)

slots    = st.integers(min_value=0, max_value=7999)
settings = st.sampled_from(list(Setting))


class TestTargets:
    def test_base_targets(self):
        targets = derive_targets(8000)
        assert targets.singles == 6624
        assert targets.pairs == 5488
        assert targets.diff_by_absdelta == {0: 0, 1: 804, 2: 2744, 3: 4684}

    def test_base_correlations(self):
        targets = derive_targets(8000)
        assert targets.correlation(0) == 1
        assert targets.correlation(1) == Fraction(3880, 5488)
        assert targets.correlation(2) == 0
        assert targets.correlation(3) == -Fraction(3880, 5488)

    def test_scaled_targets(self):
        targets = derive_targets(16000)
        assert targets.singles == 13252
        assert targets.pairs == 10976
        assert targets.d(1) == 1607
        assert targets.d(2) == 5488
        assert targets.d(3) == 10976 - 1607
        error = abs(float(targets.correlation(1)) - 2 ** -0.5)
        assert error < abs(3880 / 5488 - 2 ** -0.5)
        assert error == pytest.approx(7.25e-5, abs=1e-6)

    @pytest.mark.parametrize('n', [0, -8000, 12000, 7999])
    def test_bad_size(self, n):
        with pytest.raises(NotMultipleOf8000):
            derive_targets(n)

    def test_equal_settings_must_agree(self):
        with pytest.raises(InfeasibleTargets):
            TableTargets(8000, 6624, 5488, {0: 2, 1: 804, 2: 2744, 3: 4684})

    def test_d2_must_be_half(self):
        with pytest.raises(InfeasibleTargets):
            TableTargets(8000, 6624, 5488, {0: 0, 1: 804, 2: 2700, 3: 4684})

    def test_pairs_above_singles(self):
        with pytest.raises(InfeasibleTargets):
            TableTargets(8000, 5000, 5488, {0: 0, 1: 804, 2: 2744, 3: 4684})

    def test_inclusion_exclusion_floor(self):
        with pytest.raises(InfeasibleTargets):
            TableTargets(8000, 7800, 5488, {0: 0, 1: 804, 2: 2744, 3: 4684})

    def test_infeasible_is_value_error(self):
        with pytest.raises(ValueError):
            TableTargets(8000, 6624, 5488, {0: 0, 1: 804, 2: 2744, 3: 4600})


class TestLookup:
    @given(slot=slots, setting=settings)
    def test_shifted_index(self, base_pair, slot, setting):
        table = base_pair.alice
        expected = table.entries[(slot + setting.index * 1000) % 8000]
        assert lookup(table, slot, setting).code == expected

    @given(slot=slots, setting=st.sampled_from([Setting.BETA, Setting.GAMMA, Setting.DELTA]))
    def test_shift_coherence(self, base_pair, slot, setting):
        table = base_pair.bob
        earlier = Setting(setting.index - 1)
        assert lookup(table, slot, setting) == lookup(table, (slot + 1000) % 8000, earlier)

    def test_wraps_around(self, base_pair):
        table = base_pair.alice
        assert lookup(table, 7999, Setting.BETA) == table.outcome(999)

    @pytest.mark.parametrize('slot', [-1, 8000, 100_000])
    def test_slot_out_of_range(self, base_pair, slot):
        with pytest.raises(SlotOutOfRange):
            lookup(base_pair.alice, slot, Setting.ALPHA)

    def test_batch_matches_scalar(self, base_pair):
        rng   = np.random.default_rng(3)
        slot  = rng.integers(0, 8000, 500)
        sets  = rng.integers(0, 4, 500)
        codes = lookup_many(base_pair.alice, slot, sets)
        for s, k, code in zip(slot.tolist(), sets.tolist(), codes.tolist()):
            assert lookup(base_pair.alice, s, k).code == code

    def test_batch_rejects_bad_slot(self, base_pair):
        with pytest.raises(SlotOutOfRange):
            lookup_many(base_pair.alice, np.array([0, 8000]), np.array([0, 0]))

    def test_setting_marginal_invariance(self, base_pair):
        slot = np.arange(8000)
        for table in (base_pair.alice, base_pair.bob):
            counts = {
                k.index: int((lookup_many(table, slot, np.full(8000, k.index)) != NO_DETECT).sum())
                for k in Setting
            }
            assert set(counts.values()) == {6624}


class TestTableModel:
    def test_band(self):
        result = band(8000)
        assert (result[:4000] == 1).all()
        assert (result[4000:] == 0).all()

    def test_entries_read_only(self, base_pair):
        with pytest.raises(ValueError):
            base_pair.alice.entries[0] = 1

    def test_wrong_length(self):
        with pytest.raises(LengthMismatch):
            TranslationTable(8000, Role.ALICE, np.zeros(7999, dtype=np.int8))

    def test_bad_codes(self):
        with pytest.raises(ValueError):
            TranslationTable(8000, Role.ALICE, np.full(8000, 3, dtype=np.int8))

    def test_from_outcomes(self):
        outcomes = [Outcome.ONE, Outcome.NO_DETECT] * 4000
        table = TranslationTable.from_outcomes(Role.BOB, outcomes)
        assert table.singles == 4000
        assert table.outcome(1) is Outcome.NO_DETECT

    def test_pair_sizes_must_match(self, base_pair):
        big = TranslationTable(16000, Role.BOB, np.zeros(16000, dtype=np.int8))
        with pytest.raises(MismatchedSizes):
            TablePair(base_pair.alice, big, derive_targets(8000))

    def test_pair_roles(self, base_pair):
        with pytest.raises(RoleMissing):
            TablePair(base_pair.bob, base_pair.alice, derive_targets(8000))


class TestGeneration:
    def test_base_plan_is_exact(self):
        plan = plan_fibers(derive_targets(8000))
        assert plan is not None and plan.exact
        assert plan.fibers <= 1000

    def test_base_pair_verifies(self, base_pair):
        report = verify_tables(base_pair)
        assert report.passed, report.violations
        assert report.singles_a == report.singles_b == 6624
        assert report.pairs_by_shift == {t: 5488 for t in range(-3, 4)}
        assert [report.diff_by_shift[d] for d in range(4)] == [0, 804, 2744, 4684]
        assert report.chsh_s == Fraction(970, 343)
        assert float(report.chsh_s) == pytest.approx(2.82799, abs=1e-5)

    def test_all_sixteen_cells(self, base_pair):
        counts = sweep_counts(base_pair)
        assert len(counts) == 16
        for (j, k), (pairs, diffs) in counts.items():
            assert pairs == 5488
            assert diffs == derive_targets(8000).d(abs(j - k))

    def test_near_independence(self, base_pair):
        assert verify_tables(base_pair).near_independence < 0.01

    def test_deterministic(self, base_pair):
        again = generate_tables(derive_targets(8000), seed=1)
        assert again.alice == base_pair.alice
        assert again.bob == base_pair.bob

    def test_seed_changes_layout(self, base_pair):
        other = generate_tables(derive_targets(8000), seed=2)
        assert other.alice != base_pair.alice
        assert verify_tables(other).passed

    def test_scaled_tables_verify(self):
        pair = generate_tables(derive_targets(16000), seed=5)
        report = verify_tables(pair)
        assert report.passed, report.violations
        assert report.diff_by_shift[1] == 1607

    def test_search_exhausted(self):
        targets = TableTargets(8000, 6000, 5488, {0: 0, 1: 804, 2: 2744, 3: 4684})
        assert plan_fibers(targets) is None
        with pytest.raises(SearchExhausted) as err:
            generate_tables(targets, seed=1, max_iters=0)
        assert err.value.max_iters == 0

    def test_flipped_entry_fails(self, base_pair):
        alice, bob = base_pair.alice.entries.copy(), base_pair.bob.entries
        index = int(np.flatnonzero((alice == ZERO) & (bob != NO_DETECT))[0])
        alice[index] = ONE
        pair = TablePair(TranslationTable(8000, Role.ALICE, alice), base_pair.bob, base_pair.targets)
        report = verify_tables(pair)
        assert not report.passed
        assert report.singles_a == 6624
        assert report.pairs_by_shift[0] == 5488
        names = [name for name, _, _ in report.violations]
        assert any(name.startswith('C3 equal') for name in names)
        assert all(actual == 1 for name, _, actual in report.violations if name.startswith('C3'))
        assert any(name.startswith('C4 diff') for name in names)

    def test_blank_tables_fail(self, base_pair):
        blank = np.full(8000, NO_DETECT)
        pair = TablePair(
            TranslationTable(8000, Role.ALICE, blank),
            TranslationTable(8000, Role.BOB, blank),
            base_pair.targets)
        report = verify_tables(pair)
        assert not report.passed
        assert report.singles_a == report.singles_b == 0
        assert report.chsh_s is None
        assert ('C1 singles A', 6624, 0) in report.violations
        assert report.to_dict()['pass'] is False

    def test_report_dict(self, base_pair):
        doc = verify_tables(base_pair).to_dict()
        assert doc['pass'] is True
        assert doc['chsh_s']['exact'] == '970/343'
        assert doc['diff_by_shift']['1'] == 804
        assert len(doc['e_by_pair']) == 16
