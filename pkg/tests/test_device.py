"""Receiver devices and their mode state machine."""
import numpy as np
import pytest
from hypothesis import settings, strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule

from qkdhorse.channel import ArmView, ChannelConfig, PulseBatch, PulseEvent, emit
from qkdhorse.device import (
    DetectionRecord, InitiationKind, InitiationPulse, ReceiverState, choose_setting,
    choose_settings, handle_initiation, measure, measure_batch)
from qkdhorse.tables import TranslationTable, lookup
from qkdhorse.utils import DeviceMode, Outcome, Role, Setting
from qkdhorse.utils.errors import ModeInputMismatch

ACTIVATE = InitiationPulse(InitiationKind.TROJAN_ACTIVATE, 1)
NORMAL   = InitiationPulse(InitiationKind.NORMAL, 1)


def blank_table(role: Role = Role.ALICE) -> TranslationTable:
    return TranslationTable(8000, role, np.zeros(8000, dtype=np.int8))


class TestInitiation:
    def test_activation_arms_trojan(self, base_pair):
        state = ReceiverState(Role.ALICE, table=base_pair.alice)
        state = handle_initiation(state, ACTIVATE, seq=40)
        assert state.mode is DeviceMode.TROJAN
        assert state.synced_at == 40
        assert state.session_id == 1

    def test_genuine_device_ignores_activation(self):
        state = handle_initiation(ReceiverState(Role.BOB), ACTIVATE)
        assert state.mode is DeviceMode.QKD

    def test_normal_keeps_mode(self, base_pair):
        state = ReceiverState(Role.ALICE, table=base_pair.alice)
        assert handle_initiation(state, NORMAL).mode is DeviceMode.QKD
        armed = handle_initiation(state, ACTIVATE)
        assert handle_initiation(armed, NORMAL, seq=9).mode is DeviceMode.TROJAN

    def test_kind_from_string(self):
        assert InitiationPulse('activate').kind is InitiationKind.TROJAN_ACTIVATE

    def test_wrong_table(self, base_pair):
        with pytest.raises(ValueError):
            ReceiverState(Role.ALICE, table=base_pair.bob)

    def test_trojan_needs_table(self):
        with pytest.raises(ValueError):
            ReceiverState(Role.ALICE, mode=DeviceMode.TROJAN)

    def test_replace_keeps_fields(self, base_pair):
        state = ReceiverState(Role.ALICE, table=base_pair.alice, mask_kappa=0.828, rng_seed=5)
        moved = state.replace(synced_at=12)
        assert moved.synced_at == 12
        assert (moved.table, moved.mask_kappa, moved.rng_seed) == (base_pair.alice, 0.828, 5)
        assert state.synced_at == 0

    def test_replace_revalidates(self):
        with pytest.raises(ValueError):
            ReceiverState(Role.BOB).replace(mode=DeviceMode.TROJAN)
        with pytest.raises(ValueError):
            ReceiverState(Role.BOB).replace(mask_kappa=1.5)


class TestMeasure:
    def test_trojan_reads_table(self, base_pair):
        channel = ChannelConfig(backend='trojan', seed=2)
        state   = ReceiverState(Role.ALICE, DeviceMode.TROJAN, base_pair.alice, channel=channel)
        pulse   = emit(channel, 77)
        record  = measure(state, pulse, Setting.GAMMA)
        assert record == DetectionRecord(77, Setting.GAMMA, lookup(base_pair.alice, pulse.slot, 2))

    def test_qkd_passes_outcome(self):
        state = ReceiverState(Role.BOB)
        record = measure(state, ArmView(3, Outcome.ONE), Setting.BETA)
        assert record.outcome is Outcome.ONE

    def test_mode_input_mismatch(self, base_pair):
        armed = ReceiverState(Role.ALICE, DeviceMode.TROJAN, base_pair.alice)
        with pytest.raises(ModeInputMismatch):
            measure(armed, ArmView(0, Outcome.ZERO), Setting.ALPHA)
        with pytest.raises(ModeInputMismatch):
            measure(ReceiverState(Role.ALICE), PulseEvent(0, 5), Setting.ALPHA)
        with pytest.raises(ModeInputMismatch):
            measure_batch(ReceiverState(Role.ALICE), PulseBatch(np.arange(2), np.arange(2), np.zeros(2)), np.zeros(2))

    def test_mask_kappa(self):
        n = 50_000
        state = ReceiverState(Role.ALICE, mask_kappa=0.5, rng_seed=9)
        seqs  = np.arange(n)
        pulses = PulseBatch(seqs, np.zeros(n, np.int64), np.zeros(n, np.int8))
        codes = measure_batch(state, pulses, np.zeros(n), np.ones(n, np.int8))
        assert (codes == 1).mean() == pytest.approx(0.5, abs=0.01)

    def test_settings_uniform_and_seeded(self):
        state = ReceiverState(Role.ALICE, rng_seed=21)
        batch = choose_settings(state, np.arange(40_000))
        assert np.bincount(batch, minlength=4).min() > 9_500
        assert choose_setting(state, 1234) == Setting(int(batch[1234]))
        other = ReceiverState(Role.ALICE, rng_seed=22)
        assert not np.array_equal(batch, choose_settings(other, np.arange(40_000)))


class DeviceModeMachine(RuleBasedStateMachine):
    """the device enters trojan mode only via activation, and never leaves"""

    def __init__(self):
        super().__init__()
        self.with_table = ReceiverState(Role.ALICE, table=blank_table(),
            channel=ChannelConfig(backend='trojan'))
        self.genuine    = ReceiverState(Role.ALICE)
        self.activated  = False
        self.seq        = 0

    @rule(kind=st.sampled_from(list(InitiationKind)), session=st.integers(0, 5))
    def initiation(self, kind, session):
        pulse = InitiationPulse(kind, session)
        self.seq += 1
        self.with_table = handle_initiation(self.with_table, pulse, self.seq)
        self.genuine    = handle_initiation(self.genuine, pulse, self.seq)
        self.activated |= kind is InitiationKind.TROJAN_ACTIVATE

    @precondition(lambda self: self.with_table.mode is DeviceMode.TROJAN)
    @rule()
    def measure_pulse(self):
        record = measure(self.with_table, PulseEvent(self.seq, self.seq % 8000), Setting.ALPHA)
        assert record.outcome is Outcome.ZERO

    @invariant()
    def mode_follows_activation(self):
        expected = DeviceMode.TROJAN if self.activated else DeviceMode.QKD
        assert self.with_table.mode is expected

    @invariant()
    def genuine_stays_qkd(self):
        assert self.genuine.mode is DeviceMode.QKD

    @invariant()
    def clock_resynced(self):
        assert self.with_table.synced_at == self.seq


DeviceModeMachine.TestCase.settings = settings(max_examples=50, stateful_step_count=20, deadline=None)
TestDeviceModes = DeviceModeMachine.TestCase
