"""
Statistical Audits a Suspicious User Can Run on a Transcript
"""
import math
import logging
from typing import NamedTuple, Optional

import numpy as np
from pyderive import dataclass
from scipy.special import gammaincc
from scipy.stats import chi2_contingency

from .protocol import SessionTranscript
from .tables import TablePair, lookup_many
from .utils import PRIVATE, Role
from .utils.errors import EmptyCell, EtaOutOfRange, IncompleteTranscript, InsufficientData

#** Variables **#
__all__ = [
    'MIN_SAMPLES',
    'ChiSquare',
    'AuditReport',

    'chi2_independence',
    'slot_bit_test',
    'slot_detect_test',
    'adjusted_chsh_bound',
    'two_proportion_z',
    'singles_shift',
    'table_match',
    'audit',
]

logger = logging.getLogger(__name__)

#: fewest observations a slot test accepts
MIN_SAMPLES = 1000

#** Classes **#

class ChiSquare(NamedTuple):
    statistic: float
    dof:       int
    p_value:   float

    def flags(self, alpha: float) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return {'statistic': self.statistic, 'dof': self.dof, 'p_value': self.p_value}

@dataclass
class AuditReport:
    slot_bit_chi2:    Optional[ChiSquare]
    slot_detect_chi2: Optional[ChiSquare]
    singles_rate_a:   float
    singles_rate_b:   float
    pair_rate:        float
    s_value:          Optional[float]
    s_limit_at_eta:   float
    loophole_free:    bool
    table_match:      Optional[float] = None
    singles_shift:    Optional[float] = None
    rounds:           int = 0

    def flags(self, alpha: float) -> bool:
        """whether any slot test rejects independence at ``alpha``"""
        tests = (self.slot_bit_chi2, self.slot_detect_chi2)
        return any(t is not None and t.flags(alpha) for t in tests)

    def to_dict(self) -> dict:
        def test(value: Optional[ChiSquare]):
            return None if value is None else value.to_dict()
        return {
            'rounds':           self.rounds,
            'slot_bit_chi2':    test(self.slot_bit_chi2),
            'slot_detect_chi2': test(self.slot_detect_chi2),
            'singles_rate_a':   self.singles_rate_a,
            'singles_rate_b':   self.singles_rate_b,
            'pair_rate':        self.pair_rate,
            's_value':          self.s_value,
            's_limit_at_eta':   self.s_limit_at_eta if math.isfinite(self.s_limit_at_eta) else None,
            'loophole_free':    self.loophole_free,
            'table_match':      self.table_match,
            'singles_shift':    self.singles_shift,
        }

#** Functions **#

def chi2_independence(table: np.ndarray) -> ChiSquare:
    """
    Pearson chi-square independence test on a contingency table

    empty rows and columns are dropped first; a table left with fewer
    than two rows or columns carries no evidence (statistic 0, p 1)

    :param table: observed counts
    :return:      statistic, degrees of freedom and upper-tail p-value
    """
    table = np.asarray(table, dtype=np.float64)
    table = table[table.sum(axis=1) > 0]
    table = table[:, table.sum(axis=0) > 0]
    if table.ndim != 2 or min(table.shape) < 2:
        return ChiSquare(0.0, 0, 1.0)
    result = chi2_contingency(table, correction=False)
    stat   = float(result[0])
    dof    = (table.shape[0] - 1) * (table.shape[1] - 1)
    return ChiSquare(stat, dof, float(gammaincc(dof / 2, stat / 2)))

def _slot_bins(transcript: SessionTranscript, n_slots: Optional[int], bins: int) -> np.ndarray:
    n_slots = n_slots or transcript.n_slots
    if not n_slots:
        raise InsufficientData('slot count unknown; pass n_slots')
    if bins < 2 or bins > n_slots:
        raise ValueError(f'bins must lie in 2..{n_slots}: {bins}')
    slots = transcript.slots
    return np.where(slots >= 0, slots * bins // n_slots, -1)

def slot_bit_test(
    transcript: SessionTranscript,
    n_slots:    Optional[int] = None,
    bins:       int = 16,
) -> ChiSquare:
    """
    independence of the key bit from the coarse slot number

    :param transcript: session transcript with slot numbers
    :param n_slots:    table size (defaults to the transcript's)
    :param bins:       number of equal-width slot bins
    :return:           chi-square result over the sifted rounds
    """
    binned = _slot_bins(transcript, n_slots, bins)
    det_a, det_b = transcript.detected(Role.ALICE), transcript.detected(Role.BOB)
    key  = det_a & det_b & (transcript.settings_a == transcript.settings_b) & (binned >= 0)
    bits = transcript.outcomes_a[key]
    if (bits == PRIVATE).any():
        bits = transcript.outcomes_b[key]
    if (bits == PRIVATE).any():
        raise IncompleteTranscript('neither receiver column holds the key bits')
    if len(bits) < MIN_SAMPLES:
        raise InsufficientData(f'{len(bits)} sifted bits with slots, need {MIN_SAMPLES}')
    table = np.zeros((bins, 2), dtype=np.int64)
    np.add.at(table, (binned[key], bits.astype(np.int64)), 1)
    return chi2_independence(table)

def slot_detect_test(
    transcript: SessionTranscript,
    n_slots:    Optional[int] = None,
    bins:       int = 16,
    role:       Role = Role.ALICE,
) -> ChiSquare:
    """
    independence of detection from the slot number, per own setting

    rows are (own setting, slot bin); a receiver can build this from its
    own records alone

    :param transcript: session transcript with slot numbers
    :param n_slots:    table size (defaults to the transcript's)
    :param bins:       number of equal-width slot bins
    :param role:       whose detections are tested
    :return:           chi-square result over all rounds with a slot
    """
    binned = _slot_bins(transcript, n_slots, bins)
    known  = binned >= 0
    if int(known.sum()) < MIN_SAMPLES:
        raise InsufficientData(f'{int(known.sum())} rounds with slots, need {MIN_SAMPLES}')
    rows     = transcript.settings(role)[known].astype(np.int64) * bins + binned[known]
    detected = transcript.detected(role)[known].astype(np.int64)
    table    = np.zeros((4 * bins, 2), dtype=np.int64)
    np.add.at(table, (rows, detected), 1)
    return chi2_independence(table)

def adjusted_chsh_bound(eta: float) -> float:
    """
    CHSH ceiling reachable by local models when each arm detects at rate eta

    :param eta: per-arm detection efficiency, 0 < eta <= 1
    :return:    4 / eta - 2
    """
    if not 0.0 < eta <= 1.0:
        raise EtaOutOfRange(eta)
    return 4.0 / eta - 2.0

def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> float:
    """
    pooled two-proportion z statistic for k1/n1 against k2/n2

    :return: z score (0 when both samples are all-or-nothing alike)
    """
    if n1 <= 0 or n2 <= 0:
        raise InsufficientData('both samples need at least one trial')
    pooled = (k1 + k2) / (n1 + n2)
    se     = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    if se == 0:
        return 0.0
    return (k1 / n1 - k2 / n2) / se

def singles_shift(transcript: SessionTranscript, split: int, role: Role = Role.ALICE) -> float:
    """
    z score of a receiver's singles rate before round ``split`` against after it

    A device that starts thinning or looking up its outcomes partway through a
    session changes its singles rate at that round.

    :param transcript: session transcript
    :param split:      first seq of the later sample
    :param role:       receiver whose detections are compared
    :return:           two-proportion z score (early minus late)
    """
    detected = transcript.detected(role)
    early    = transcript.seqs < split
    n_early  = int(early.sum())
    return two_proportion_z(
        int(detected[early].sum()), n_early,
        int(detected[~early].sum()), len(detected) - n_early)

def table_match(transcript: SessionTranscript, tables: TablePair, role: Role = Role.ALICE) -> Optional[float]:
    """
    fraction of a receiver's detected outcomes equal to its table lookup

    :param transcript: session transcript with slot numbers
    :param tables:     suspected translation tables
    :param role:       receiver to compare
    :return:           match fraction, None without comparable rounds
    """
    outcomes = transcript.outcomes(role)
    rows = (transcript.slots >= 0) & transcript.detected(role) & (outcomes != PRIVATE)
    if not rows.any():
        return None
    table    = tables.table(role)
    slots    = transcript.slots[rows] % table.n_slots
    expected = lookup_many(table, slots, transcript.settings(role)[rows])
    return float(np.mean(expected == outcomes[rows]))

def audit(transcript: SessionTranscript, tables: Optional[TablePair] = None, bins: int = 16) -> AuditReport:
    """
    run every audit on a transcript

    :param transcript: full session transcript
    :param tables:     suspected translation tables, when available
    :param bins:       slot bins of the chi-square tests
    :return:           combined audit report
    """
    if not len(transcript):
        raise InsufficientData('empty transcript')
    tests = []
    for test in (slot_bit_test, slot_detect_test):
        try:
            tests.append(test(transcript, bins=bins))
        except InsufficientData as e:
            logger.info('%s skipped: %s', test.__name__, e)
            tests.append(None)
    rate_a = transcript.singles_rate(Role.ALICE)
    rate_b = transcript.singles_rate(Role.BOB)
    eta    = min(rate_a, rate_b)
    limit  = adjusted_chsh_bound(eta) if eta > 0 else math.inf
    try:
        s_value = transcript.chsh_report.s_value
    except (EmptyCell, IncompleteTranscript):
        s_value = None
    try:
        shift = singles_shift(transcript, int(transcript.seqs[len(transcript) // 2]))
    except InsufficientData:
        shift = None
    return AuditReport(
        slot_bit_chi2=tests[0],
        slot_detect_chi2=tests[1],
        singles_rate_a=rate_a,
        singles_rate_b=rate_b,
        pair_rate=transcript.pair_rate,
        s_value=s_value,
        s_limit_at_eta=limit,
        loophole_free=s_value is not None and s_value > limit,
        table_match=table_match(transcript, tables) if tables is not None else None,
        singles_shift=shift,
        rounds=len(transcript),
    )
