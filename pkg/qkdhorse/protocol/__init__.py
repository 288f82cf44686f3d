"""
Ekert Session Orchestration: Announcements, Sifting, CHSH and QBER
"""
import math
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
from pyderive import dataclass, field

from ..channel import ChannelConfig
from ..device import DetectionRecord
from ..tables import CHSH_PAIRS, TablePair
from ..utils import NO_DETECT, PRIVATE, Outcome, Role, Setting, derive_seed
from ..utils.errors import EmptyCell, EmptyKey, IncompleteTranscript

#** Variables **#
__all__ = [
    'SettingPolicy',
    'SessionConfig',
    'ClassicalMessage',
    'SiftedKey',
    'CorrelationEstimate',
    'ChshReport',
    'SessionTranscript',

    'Session',
    'run_session',
    'sift',
    'sift_arrays',
    'correlation_grid',
    'estimate_correlation',
    'chsh',
    'qber',
    'dumps_transcript',
    'loads_transcript',
    'export_transcript',
    'import_transcript',
    'merge_transcripts',
]

SettingPair = Tuple[Setting, Setting]

#** Classes **#

class SettingPolicy(Enum):
    RANDOM = 'random'
    SWEEP  = 'sweep'

@dataclass(frozen=True)
class SessionConfig:
    channel:        ChannelConfig = field(default_factory=ChannelConfig)
    tables:         Optional[TablePair] = field(default=None, repr=False)
    rounds:         int = 1000
    alice_seed:     int = 1
    bob_seed:       int = 2
    mask_kappa:     float = 1.0
    setting_policy: SettingPolicy = SettingPolicy.RANDOM
    activate_at:    Optional[int] = None
    session_id:     int = 0
    chsh_fraction:  float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'setting_policy', SettingPolicy(self.setting_policy))
        if self.rounds < 1:
            raise ValueError(f'a session needs at least one round: {self.rounds}')
        if self.channel.trojan and self.tables is None:
            raise ValueError(f'{self.channel.backend.value} backend requires tables')
        if self.tables is not None and self.tables.n_slots != self.channel.n_slots:
            raise ValueError('table size differs from the channel slot count')
        if self.activate_at is not None and self.activate_at < 0:
            raise ValueError(f'activation round must be non-negative: {self.activate_at}')
        if not 0.0 < self.chsh_fraction <= 1.0:
            raise ValueError(f'chsh_fraction must lie in (0, 1]: {self.chsh_fraction}')

    @classmethod
    def from_seed(cls, seed: int, channel: Optional[ChannelConfig] = None, **kwargs) -> 'SessionConfig':
        """
        expand one master seed into channel/alice/bob seeds

        :param seed:    master seed
        :param channel: channel settings (its own seed is replaced)
        :param kwargs:  remaining session fields
        :return:        seeded session configuration
        """
        channel = channel or ChannelConfig()
        channel = ChannelConfig(
            backend=channel.backend,
            n_slots=channel.n_slots,
            slot_policy=channel.slot_policy,
            eta=channel.eta,
            noise_q=channel.noise_q,
            seed=derive_seed(seed, 'channel'),
        )
        return cls(
            channel=channel,
            alice_seed=derive_seed(seed, 'alice'),
            bob_seed=derive_seed(seed, 'bob'),
            **kwargs,
        )

    def seed_for(self, role: Role) -> int:
        return self.alice_seed if role is Role.ALICE else self.bob_seed

@dataclass(frozen=True)
class ClassicalMessage:
    """public announcement: detection flag and setting, never the result"""
    seq:      int
    sender:   Role
    detected: bool
    setting:  Setting

@dataclass(frozen=True, eq=False)
class SiftedKey:
    bits: np.ndarray
    seqs: np.ndarray

    def __post_init__(self):
        if len(self.bits) != len(self.seqs):
            raise ValueError('key bits and rounds differ in length')

    def __len__(self) -> int:
        return len(self.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SiftedKey):
            return NotImplemented
        return np.array_equal(self.bits, other.bits) and np.array_equal(self.seqs, other.seqs)

    def as_dict(self) -> Dict[int, int]:
        return dict(zip(self.seqs.tolist(), self.bits.tolist()))

@dataclass(frozen=True)
class CorrelationEstimate:
    setting_pair: SettingPair
    n_same:       int
    n_diff:       int

    def __post_init__(self):
        if self.n_same + self.n_diff <= 0:
            raise EmptyCell(f'no double detections for {self.label}')

    @property
    def label(self) -> str:
        return ''.join(Setting(s).symbol for s in self.setting_pair)

    @property
    def total(self) -> int:
        return self.n_same + self.n_diff

    @property
    def e_value(self) -> Fraction:
        return Fraction(self.n_same - self.n_diff, self.total)

    @property
    def std_err(self) -> float:
        e = float(self.e_value)
        return math.sqrt(max(0.0, 1 - e * e) / self.total)

    def to_dict(self) -> dict:
        return {
            'pair':    self.label,
            'n_same':  self.n_same,
            'n_diff':  self.n_diff,
            'e':       float(self.e_value),
            'std_err': self.std_err,
        }

@dataclass(frozen=True)
class ChshReport:
    e_ab:    object
    e_gb:    object
    e_gd:    object
    e_ad:    object
    s_value: float
    s_exact: Optional[Fraction] = None
    std_err: float = 0.0

    @property
    def violated(self) -> bool:
        return self.s_value > 2

    def to_dict(self) -> dict:
        exact = self.s_exact
        cells = {}
        for name in ('e_ab', 'e_gb', 'e_gd', 'e_ad'):
            cell = getattr(self, name)
            cells[name] = float(cell.e_value if isinstance(cell, CorrelationEstimate) else cell)
        return {
            **cells,
            's':        self.s_value,
            's_exact':  None if exact is None else f'{exact.numerator}/{exact.denominator}',
            'std_err':  self.std_err,
            'violated': self.violated,
        }

class SessionTranscript:
    """
    per-round columns of a finished session plus everything derived from them

    outcome columns hold codes 0/1, -1 for NoDetect and 2 for a detected
    outcome whose value is private to the other receiver
    """

    def __init__(self,
        seqs:       np.ndarray,
        slots:      np.ndarray,
        settings_a: np.ndarray,
        settings_b: np.ndarray,
        outcomes_a: np.ndarray,
        outcomes_b: np.ndarray,
        polbits:    Optional[np.ndarray] = None,
        trojan:     Optional[np.ndarray] = None,
        config:     Optional[SessionConfig] = None,
        n_slots:    Optional[int] = None,
    ):
        self.seqs       = np.asarray(seqs, dtype=np.int64)
        self.slots      = np.asarray(slots, dtype=np.int64)
        self.settings_a = np.asarray(settings_a, dtype=np.int8)
        self.settings_b = np.asarray(settings_b, dtype=np.int8)
        self.outcomes_a = np.asarray(outcomes_a, dtype=np.int8)
        self.outcomes_b = np.asarray(outcomes_b, dtype=np.int8)
        size = len(self.seqs)
        self.polbits = np.zeros(size, np.int8) if polbits is None else np.asarray(polbits, np.int8)
        self.trojan  = np.zeros(size, bool) if trojan is None else np.asarray(trojan, bool)
        self.config  = config
        self.n_slots = n_slots or (config.channel.n_slots if config else None)
        columns = (self.slots, self.settings_a, self.settings_b, self.outcomes_a, self.outcomes_b)
        if any(len(c) != size for c in columns):
            raise IncompleteTranscript('transcript columns differ in length')

    def __len__(self) -> int:
        return len(self.seqs)

    def __repr__(self) -> str:
        return f'SessionTranscript(rounds={len(self)}, n_slots={self.n_slots})'

    def settings(self, role: Role) -> np.ndarray:
        return self.settings_a if role is Role.ALICE else self.settings_b

    def outcomes(self, role: Role) -> np.ndarray:
        return self.outcomes_a if role is Role.ALICE else self.outcomes_b

    def detected(self, role: Role) -> np.ndarray:
        return self.outcomes(role) != NO_DETECT

    def messages(self) -> Iterator[ClassicalMessage]:
        """announcements in broadcast order (alice before bob each round)"""
        det_a, det_b = self.detected(Role.ALICE).tolist(), self.detected(Role.BOB).tolist()
        for i, seq in enumerate(self.seqs.tolist()):
            yield ClassicalMessage(seq, Role.ALICE, det_a[i], Setting(int(self.settings_a[i])))
            yield ClassicalMessage(seq, Role.BOB, det_b[i], Setting(int(self.settings_b[i])))

    def records(self, role: Role) -> Iterator[DetectionRecord]:
        """the receiver's private detection records"""
        settings, outcomes = self.settings(role).tolist(), self.outcomes(role).tolist()
        for seq, setting, code in zip(self.seqs.tolist(), settings, outcomes):
            if code == PRIVATE:
                raise IncompleteTranscript(f'{role.label} outcome of round {seq} is private')
            yield DetectionRecord(seq, Setting(setting), Outcome.from_code(code))

    @cached_property
    def chsh_sample(self) -> np.ndarray:
        """rounds admitted to CHSH estimation (public, seeded)"""
        if self.config is None or self.config.chsh_fraction >= 1.0:
            return np.ones(len(self), dtype=bool)
        stream = self.config.channel.stream('chsh-sample')
        return stream.uniforms(self.seqs) < self.config.chsh_fraction

    @cached_property
    def sifted(self) -> Tuple[SiftedKey, SiftedKey, Dict[SettingPair, np.ndarray]]:
        key, subsets = sift_arrays(self.settings_a, self.settings_b,
            self.detected(Role.ALICE), self.detected(Role.BOB), self.chsh_sample)
        seqs = self.seqs[key]
        return (
            SiftedKey(self.outcomes_a[key], seqs),
            SiftedKey(self.outcomes_b[key], seqs),
            {pair: self.seqs[mask] for pair, mask in subsets.items()},
        )

    @property
    def key_a(self) -> SiftedKey:
        return self.sifted[0]

    @property
    def key_b(self) -> SiftedKey:
        return self.sifted[1]

    def _require_outcomes(self):
        both = self.detected(Role.ALICE) & self.detected(Role.BOB)
        if ((self.outcomes_a[both] == PRIVATE) | (self.outcomes_b[both] == PRIVATE)).any():
            raise IncompleteTranscript('peer outcomes are private; merge both receiver transcripts')

    @cached_property
    def grid(self) -> Dict[SettingPair, Optional[CorrelationEstimate]]:
        """correlation estimates for all 16 setting pairs (None when empty)"""
        self._require_outcomes()
        counts = correlation_grid(self.settings_a, self.settings_b,
            self.outcomes_a, self.outcomes_b, self.chsh_sample)
        grid = {}
        for (j, k), (same, diff) in counts.items():
            pair = (Setting(j), Setting(k))
            grid[pair] = CorrelationEstimate(pair, same, diff) if same + diff else None
        return grid

    @cached_property
    def chsh_report(self) -> ChshReport:
        cells = [self.grid[pair] for pair in CHSH_PAIRS]
        for pair, cell in zip(CHSH_PAIRS, cells):
            if cell is None:
                raise EmptyCell(f'no double detections for {pair[0].symbol}{pair[1].symbol}')
        return chsh(*cells)

    @cached_property
    def qber(self) -> float:
        self._require_outcomes()
        return qber(self.key_a, self.key_b)

    def singles_rate(self, role: Role) -> float:
        return float(np.mean(self.detected(role))) if len(self) else 0.0

    @property
    def pair_rate(self) -> float:
        if not len(self):
            return 0.0
        return float(np.mean(self.detected(Role.ALICE) & self.detected(Role.BOB)))

    def summary(self) -> dict:
        """headline statistics of the session"""
        try:
            report = self.chsh_report.to_dict()
        except (EmptyCell, IncompleteTranscript):
            report = None
        try:
            error = self.qber
        except (EmptyKey, IncompleteTranscript):
            error = None
        return {
            'rounds':         len(self),
            'singles_rate_a': self.singles_rate(Role.ALICE),
            'singles_rate_b': self.singles_rate(Role.BOB),
            'pair_rate':      self.pair_rate,
            'key_bits':       len(self.key_a),
            'sift_yield':     len(self.key_a) / len(self) if len(self) else 0.0,
            'qber':           error,
            'chsh':           report,
        }

#** Init **#

from .stats import sift, sift_arrays, correlation_grid, estimate_correlation, chsh, qber
from .session import Session, run_session
from .transcript import (
    dumps_transcript, loads_transcript, export_transcript, import_transcript, merge_transcripts)
