"""
Receiver Devices: Setting Choice, Measurement and Mode Switching

A receiver leaves the factory in QKD mode and measures the photons it is
sent. A receiver carrying translation tables switches to Trojan mode when
it sees the activation initiation pulse and stays there for the session.
"""
import logging
from enum import Enum
from typing import Optional, Union

import numpy as np
from pyderive import dataclass, field, replace

from .channel import ArmView, ChannelConfig, PulseBatch, PulseEvent, resolve_arm, resolve_arm_batch
from .tables import TranslationTable
from .utils import NO_DETECT, DeviceMode, Outcome, Role, SeedStream, Setting
from .utils.errors import ModeInputMismatch

#** Variables **#
__all__ = [
    'DeviceMode',
    'InitiationKind',
    'InitiationPulse',
    'ReceiverState',
    'DetectionRecord',
    'ArmView',

    'handle_initiation',
    'choose_setting',
    'choose_settings',
    'measure',
    'measure_batch',
]

logger = logging.getLogger(__name__)

#: stream labels drawn from the receiver seed
SETTING_STREAM = 'setting'
MASK_STREAM    = 'mask'

RoundInput = Union[PulseEvent, ArmView]

#** Classes **#

class InitiationKind(Enum):
    NORMAL          = 'normal'
    TROJAN_ACTIVATE = 'activate'

@dataclass(frozen=True)
class InitiationPulse:
    kind:       InitiationKind = InitiationKind.NORMAL
    session_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'kind', InitiationKind(self.kind))

@dataclass(frozen=True)
class DetectionRecord:
    seq:     int
    setting: Setting
    outcome: Outcome

@dataclass(frozen=True)
class ReceiverState:
    role:       Role
    mode:       DeviceMode = DeviceMode.QKD
    table:      Optional[TranslationTable] = field(default=None, repr=False)
    mask_kappa: float = 1.0
    rng_seed:   int = 0
    channel:    ChannelConfig = field(default_factory=ChannelConfig)
    synced_at:  int = 0
    session_id: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mask_kappa <= 1.0:
            raise ValueError(f'mask_kappa must lie in [0, 1]: {self.mask_kappa!r}')
        if self.table is not None and self.table.role is not self.role:
            raise ValueError(f'{self.role.label} device loaded with a {self.table.role.label} table')
        if self.mode is DeviceMode.TROJAN and self.table is None:
            raise ValueError('trojan mode requires a translation table')

    def replace(self, **changes) -> 'ReceiverState':
        return replace(self, **changes)

#** Functions **#

def handle_initiation(state: ReceiverState, pulse: InitiationPulse, seq: int = 0) -> ReceiverState:
    """
    process an initiation pulse: resync the slot clock, maybe arm the Trojan

    :param state: current receiver state
    :param pulse: received initiation pulse
    :param seq:   round at which the pulse arrives (new clock origin)
    :return:      updated receiver state
    """
    mode = state.mode
    if pulse.kind is InitiationKind.TROJAN_ACTIVATE and state.table is not None:
        mode = DeviceMode.TROJAN
    if mode is not state.mode:
        logger.info('%s device switched to %s mode at round %d', state.role.label, mode.value, seq)
    return state.replace(mode=mode, synced_at=seq, session_id=pulse.session_id)

def choose_settings(state: ReceiverState, seqs: np.ndarray) -> np.ndarray:
    """
    uniform setting indices from the receiver's own stream

    :param state: receiver state (seed)
    :param seqs:  round counters
    :return:      setting indices 0..3
    """
    return SeedStream(state.rng_seed, SETTING_STREAM).integers(seqs, len(Setting))

def choose_setting(state: ReceiverState, seq: int) -> Setting:
    return Setting(int(choose_settings(state, np.array([seq]))[0]))

def mask_codes(state: ReceiverState, seqs: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """drop QKD-mode detections with probability 1 - mask_kappa"""
    if state.mask_kappa >= 1.0:
        return np.asarray(codes, dtype=np.int8)
    keep = SeedStream(state.rng_seed, MASK_STREAM).uniforms(seqs) < state.mask_kappa
    return np.where(keep, codes, NO_DETECT).astype(np.int8)

def measure_batch(
    state:     ReceiverState,
    pulses:    PulseBatch,
    settings:  np.ndarray,
    arm_codes: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    vectorized `measure` over a run of rounds in one mode

    :param state:     receiver state
    :param pulses:    pulses of the rounds (Trojan mode input)
    :param settings:  the receiver's setting indices
    :param arm_codes: the receiver's half of the resolved rounds (QKD mode input)
    :return:          outcome codes
    """
    if state.mode is DeviceMode.TROJAN:
        return resolve_arm_batch(state.channel, state.table,
            pulses.seqs, pulses.slots, pulses.polbits, settings)
    if arm_codes is None:
        raise ModeInputMismatch('qkd-mode measurement needs resolved outcomes')
    return mask_codes(state, pulses.seqs, arm_codes)

def measure(state: ReceiverState, round_input: RoundInput, setting: Setting) -> DetectionRecord:
    """
    measure one round in the device's current mode

    :param state:       receiver state
    :param round_input: a pulse (Trojan mode) or the receiver's arm view (QKD mode)
    :param setting:     setting chosen for the round
    :return:            record kept for the announcement
    """
    setting = Setting(setting)
    if state.mode is DeviceMode.TROJAN:
        if not isinstance(round_input, PulseEvent):
            raise ModeInputMismatch(f'trojan mode expects a PulseEvent, got {type(round_input).__name__}')
        outcome = resolve_arm(state.channel, state.table, round_input, setting)
        return DetectionRecord(round_input.seq, setting, outcome)
    if not isinstance(round_input, ArmView):
        raise ModeInputMismatch(f'qkd mode expects an ArmView, got {type(round_input).__name__}')
    code = mask_codes(state, np.array([round_input.seq]), np.array([round_input.outcome.code]))
    return DetectionRecord(round_input.seq, setting, Outcome.from_code(code[0]))
