"""
Translation Tables: Data Model, Targets and Lookup
"""
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pyderive import dataclass, field

from ..utils import NO_DETECT, ONE, ZERO, Outcome, Role, Setting
from ..utils.errors import *

#** Variables **#
__all__ = [
    'BASE_SLOTS',
    'SHIFTS',
    'CHSH_PAIRS',

    'TranslationTable',
    'TableTargets',
    'TablePair',
    'VerificationReport',

    'band',
    'derive_targets',
    'lookup',
    'lookup_many',

    'plan_fibers',
    'generate_tables',
    'verify_tables',
    'save_table',
    'load_table',
]

#: table sizes must be multiples of this slot count
BASE_SLOTS = 8000

#: realizable signed shifts (k - j) between setting indices
SHIFTS = (-3, -2, -1, 0, 1, 2, 3)

#: setting pairs entering S = |E(a,b) + E(g,b)| + |E(g,d) - E(a,d)|
CHSH_PAIRS = (
    (Setting.ALPHA, Setting.BETA),
    (Setting.GAMMA, Setting.BETA),
    (Setting.GAMMA, Setting.DELTA),
    (Setting.ALPHA, Setting.DELTA),
)

#: rows published for the 8000-slot table
BASE_TARGETS = {'singles': 6624, 'pairs': 5488, 'diffs': (0, 804, 2744, 4684)}

SettingLike = Union[Setting, int]

#** Functions **#

def _check_slots(n_slots: int):
    if isinstance(n_slots, bool) or not isinstance(n_slots, (int, np.integer)) \
            or n_slots <= 0 or n_slots % BASE_SLOTS:
        raise NotMultipleOf8000(n_slots)

def band(n_slots: int) -> np.ndarray:
    """
    result band shared by both tables: One on the lower half, Zero above

    :param n_slots: table size
    :return:        int8 array of outcome codes
    """
    return np.where(np.arange(n_slots) < n_slots // 2, ONE, ZERO).astype(np.int8)

#** Classes **#

@dataclass(frozen=True, eq=False)
class TranslationTable:
    """slot -> outcome map consulted at (slot + setting * block) mod n_slots"""
    n_slots: int
    role:    Role
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_slots(self.n_slots)
        if not isinstance(self.role, Role):
            raise RoleMissing(f'table role must be a Role: {self.role!r}')
        entries = np.array(self.entries, dtype=np.int8)
        if entries.ndim != 1 or entries.size != self.n_slots:
            raise LengthMismatch(self.n_slots, entries.size, 'table')
        if not np.isin(entries, (ZERO, ONE, NO_DETECT)).all():
            raise ValueError('table entries must be outcome codes 0, 1 or -1')
        entries.flags.writeable = False
        object.__setattr__(self, 'entries', entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TranslationTable):
            return NotImplemented
        return self.n_slots == other.n_slots \
            and self.role == other.role \
            and np.array_equal(self.entries, other.entries)

    @property
    def block(self) -> int:
        return self.n_slots // 8

    @property
    def detected(self) -> np.ndarray:
        return self.entries != NO_DETECT

    @property
    def singles(self) -> int:
        return int(np.count_nonzero(self.detected))

    def outcome(self, index: int) -> Outcome:
        return Outcome.from_code(self.entries[index])

    @classmethod
    def from_outcomes(cls, role: Role, outcomes: Sequence[Outcome]) -> 'TranslationTable':
        codes = np.fromiter((o.code for o in outcomes), dtype=np.int8)
        return cls(n_slots=len(codes), role=role, entries=codes)

@dataclass(frozen=True)
class TableTargets:
    """exact integer counts a table pair must reproduce"""
    n_slots:          int
    singles:          int
    pairs:            int
    diff_by_absdelta: Dict[int, int]

    def __post_init__(self):
        self.check()

    def d(self, absdelta: int) -> int:
        return self.diff_by_absdelta[absdelta]

    def check(self):
        """
        validate the target invariants

        :raises NotMultipleOf8000: invalid table size
        :raises InfeasibleTargets: counts violating an invariant
        """
        _check_slots(self.n_slots)
        n, s, p, d = self.n_slots, self.singles, self.pairs, self.diff_by_absdelta
        if sorted(d) != [0, 1, 2, 3]:
            raise InfeasibleTargets(f'disagreements needed for |delta| 0..3: {sorted(d)}')
        if not 0 <= p <= s <= n:
            raise InfeasibleTargets(f'need 0 <= pairs <= singles <= n_slots: {p}, {s}, {n}')
        if p < 2 * s - n:
            raise InfeasibleTargets(
                f'pairs {p} below inclusion-exclusion floor 2*singles-N = {2 * s - n}')
        if d[0] != 0:
            raise InfeasibleTargets(f'equal settings must never disagree: d0={d[0]}')
        if p % 2 or d[2] != p // 2:
            raise InfeasibleTargets(f'd2 must equal pairs/2: d2={d[2]}, pairs={p}')
        if d[3] != p - d[1]:
            raise InfeasibleTargets(f'd3 must equal pairs-d1: d3={d[3]}, d1={d[1]}')
        if not 0 <= d[1] <= p:
            raise InfeasibleTargets(f'd1 outside 0..pairs: {d[1]}')

    def correlation(self, absdelta: int) -> Fraction:
        """
        correlation implied by the targets at the given |setting delta|

        :param absdelta: absolute setting-index difference
        :return:         exact rational E
        """
        if self.pairs == 0:
            raise EmptyCell('targets have no coincidences')
        return Fraction(self.pairs - 2 * self.d(absdelta), self.pairs)

    def to_dict(self) -> dict:
        return {
            'n_slots': self.n_slots,
            'singles': self.singles,
            'pairs':   self.pairs,
            'diff_by_absdelta': {str(k): v for k, v in sorted(self.diff_by_absdelta.items())},
        }

@dataclass(frozen=True)
class TablePair:
    alice:   TranslationTable
    bob:     TranslationTable
    targets: TableTargets
    seed:    int = 0

    def __post_init__(self):
        if self.alice.n_slots != self.bob.n_slots:
            raise MismatchedSizes(
                f'table sizes differ: {self.alice.n_slots} != {self.bob.n_slots}')
        if self.alice.role is not Role.ALICE or self.bob.role is not Role.BOB:
            raise RoleMissing('pair needs an Alice table and a Bob table')

    @property
    def n_slots(self) -> int:
        return self.alice.n_slots

    def table(self, role: Role) -> TranslationTable:
        return self.alice if role is Role.ALICE else self.bob

@dataclass
class VerificationReport:
    singles_a:         int
    singles_b:         int
    pairs_by_shift:    Dict[int, int]
    diff_by_shift:     Dict[int, int]
    e_by_absdelta:     Dict[int, Optional[Fraction]]
    e_by_pair:         Dict[Tuple[int, int], Optional[Fraction]]
    chsh_s:            Optional[Fraction]
    near_independence: float
    violations:        List[Tuple[str, int, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        """
        json-friendly view (fractions as ``num/den`` plus float value)
        """
        def frac(value: Optional[Fraction]):
            if value is None:
                return None
            return {'exact': f'{value.numerator}/{value.denominator}', 'value': float(value)}
        return {
            'pass':           self.passed,
            'singles_a':      self.singles_a,
            'singles_b':      self.singles_b,
            'pairs_by_shift': {str(k): v for k, v in sorted(self.pairs_by_shift.items())},
            'diff_by_shift':  {str(k): v for k, v in sorted(self.diff_by_shift.items())},
            'e_by_absdelta':  {str(k): frac(v) for k, v in sorted(self.e_by_absdelta.items())},
            'e_by_pair':      {f'{j}{k}': frac(v) for (j, k), v in sorted(self.e_by_pair.items())},
            'chsh_s':         frac(self.chsh_s),
            'near_independence': self.near_independence,
            'violations': [
                {'constraint': c, 'expected': e, 'actual': a} for c, e, a in self.violations
            ],
        }

#** Functions **#

def derive_targets(n_slots: int) -> TableTargets:
    """
    derive the count constraints for a table of the given size

    :param n_slots: table size, a positive multiple of 8000
    :return:        targets reproducing the published rates
    """
    _check_slots(n_slots)
    if n_slots == BASE_SLOTS:
        singles, pairs = BASE_TARGETS['singles'], BASE_TARGETS['pairs']
        diffs = dict(enumerate(BASE_TARGETS['diffs']))
        return TableTargets(n_slots, singles, pairs, diffs)
    singles = round(n_slots * 2 * (math.sqrt(2) - 1)) // 4 * 4
    pairs   = 4 * round(n_slots * 0.686 / 4)
    d1      = round(pairs * (1 - 1 / math.sqrt(2)) / 2)
    diffs   = {0: 0, 1: d1, 2: pairs // 2, 3: pairs - d1}
    return TableTargets(n_slots, singles, pairs, diffs)

def lookup(table: TranslationTable, slot: int, setting: SettingLike) -> Outcome:
    """
    translate a received slot into an outcome at the given setting

    :param table:   translation table of the receiver
    :param slot:    received slot number
    :param setting: analyzer setting chosen for the round
    :return:        outcome stored at the shifted slot
    """
    if not 0 <= slot < table.n_slots:
        raise SlotOutOfRange(slot, table.n_slots)
    index = (slot + Setting(setting).index * table.block) % table.n_slots
    return Outcome.from_code(table.entries[index])

def lookup_many(table: TranslationTable, slots: np.ndarray, settings: np.ndarray) -> np.ndarray:
    """
    vectorized `lookup` returning outcome codes

    :param table:    translation table of the receiver
    :param slots:    received slot numbers
    :param settings: setting indices aligned with ``slots``
    :return:         int8 outcome codes
    """
    slots = np.asarray(slots, dtype=np.int64)
    if slots.size and (slots.min() < 0 or slots.max() >= table.n_slots):
        bad = int(slots[(slots < 0) | (slots >= table.n_slots)][0])
        raise SlotOutOfRange(bad, table.n_slots)
    index = (slots + np.asarray(settings, dtype=np.int64) * table.block) % table.n_slots
    return table.entries[index]

#** Init **#

from .generate import plan_fibers, generate_tables
from .verify import verify_tables
from .codec import save_table, load_table
