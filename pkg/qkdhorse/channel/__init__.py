"""
Source Models and Outcome Resolution for the Channel Backends
"""
from enum import Enum
from typing import Optional

import numpy as np
from pyderive import dataclass, field

from ..utils import Outcome, Role, SeedStream

#** Variables **#
__all__ = [
    'Backend',
    'SlotPolicy',
    'ChannelConfig',
    'PulseEvent',
    'PulseBatch',
    'ArmView',
    'ResolvedRound',

    'emit',
    'emit_batch',
    'quantum_outcomes',
    'resolve_honest',
    'resolve_honest_batch',
    'resolve_arm',
    'resolve_arm_batch',
    'resolve_trojan',
    'resolve_trojan_batch',
]

#: stream labels drawn from the channel seed
SLOT_STREAM   = 'slot'
POL_STREAM    = 'pol'
BIT_STREAM    = 'honest-bit'
AGREE_STREAM  = 'honest-agree'

#** Classes **#

class Backend(Enum):
    HONEST        = 'honest'
    TROJAN        = 'trojan'
    TROJAN_MASKED = 'trojan-masked'

class SlotPolicy(Enum):
    UNIFORM = 'uniform'
    CYCLIC  = 'cyclic'

@dataclass(frozen=True)
class ChannelConfig:
    """physical link shared by the source and both receivers"""
    backend:     Backend    = Backend.HONEST
    n_slots:     int        = 8000
    slot_policy: SlotPolicy = SlotPolicy.UNIFORM
    eta:         float      = 1.0
    noise_q:     float      = 0.0
    seed:        int        = 0

    def __post_init__(self):
        object.__setattr__(self, 'backend', Backend(self.backend))
        object.__setattr__(self, 'slot_policy', SlotPolicy(self.slot_policy))
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f'eta must lie in [0, 1]: {self.eta!r}')
        if not 0.0 <= self.noise_q <= 1.0:
            raise ValueError(f'noise_q must lie in [0, 1]: {self.noise_q!r}')
        if self.n_slots <= 0 or (self.trojan and self.n_slots % 8000):
            raise ValueError(f'invalid slot count for {self.backend.value}: {self.n_slots}')

    @property
    def trojan(self) -> bool:
        return self.backend is not Backend.HONEST

    @property
    def masked(self) -> bool:
        return self.backend is Backend.TROJAN_MASKED

    def stream(self, label: str) -> SeedStream:
        return SeedStream(self.seed, label)

    def arm_stream(self, kind: str, role: Role) -> SeedStream:
        """per-arm stream: draws for one receiver never touch the other's"""
        return SeedStream(self.seed, f'{kind}-{role.value}')

@dataclass(frozen=True)
class PulseEvent:
    seq:    int
    slot:   Optional[int] = None
    polbit: int = 0

    def __post_init__(self):
        if self.polbit not in (0, 1):
            raise ValueError(f'polbit must be 0 or 1: {self.polbit!r}')

@dataclass(frozen=True, eq=False)
class PulseBatch:
    """column view of consecutive pulses"""
    seqs:    np.ndarray
    slots:   np.ndarray
    polbits: np.ndarray

    def __len__(self) -> int:
        return len(self.seqs)

    def __getitem__(self, i: int) -> PulseEvent:
        return PulseEvent(int(self.seqs[i]), int(self.slots[i]), int(self.polbits[i]))

@dataclass(frozen=True)
class ArmView:
    """one receiver's half of a resolved round"""
    seq:     int
    outcome: Outcome

@dataclass(frozen=True)
class ResolvedRound:
    seq:           int
    outcome_alice: Outcome
    outcome_bob:   Outcome

    def half(self, role: Role) -> ArmView:
        outcome = self.outcome_alice if role is Role.ALICE else self.outcome_bob
        return ArmView(self.seq, outcome)

#** Functions **#

def emit_batch(config: ChannelConfig, seqs: np.ndarray) -> PulseBatch:
    """
    emit the pulses for many rounds at once

    :param config: channel configuration
    :param seqs:   round counters
    :return:       slots (and polarization bits) per round
    """
    seqs = np.asarray(seqs, dtype=np.int64)
    if seqs.size and seqs.min() < 0:
        raise ValueError('round counters must be non-negative')
    if config.slot_policy is SlotPolicy.CYCLIC:
        slots = seqs % config.n_slots
    else:
        slots = config.stream(SLOT_STREAM).integers(seqs, config.n_slots)
    polbits = np.zeros(seqs.shape, dtype=np.int8)
    if config.masked:
        polbits = (config.stream(POL_STREAM).uniforms(seqs) < 0.5).astype(np.int8)
    return PulseBatch(seqs, slots, polbits)

def emit(config: ChannelConfig, seq: int) -> PulseEvent:
    """
    emit the pulse for a single round

    :param config: channel configuration
    :param seq:    round counter
    :return:       pulse event, identical to the batch value for ``seq``
    """
    return emit_batch(config, np.array([seq]))[0]

#** Init **#

from .honest import quantum_outcomes, resolve_honest, resolve_honest_batch
from .trojan import resolve_arm, resolve_arm_batch, resolve_trojan, resolve_trojan_batch
