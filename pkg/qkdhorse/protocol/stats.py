"""
Sifting, Correlation Estimates, CHSH and QBER
"""
import math
from fractions import Fraction
from numbers import Real
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from . import ChshReport, ClassicalMessage, CorrelationEstimate, SiftedKey
from ..device import DetectionRecord
from ..tables import CHSH_PAIRS
from ..utils import NO_DETECT, Outcome, Role, Setting
from ..utils.errors import EmptyKey, IncompleteTranscript, LengthMismatch

#** Variables **#
__all__ = [
    'sift',
    'sift_arrays',
    'correlation_grid',
    'estimate_correlation',
    'chsh',
    'qber',
]

SettingPair = Tuple[Setting, Setting]
Estimate    = Union[CorrelationEstimate, Real]
KeyLike     = Union[SiftedKey, Sequence[int], np.ndarray]

#** Functions **#

def sift_arrays(
    settings_a: np.ndarray,
    settings_b: np.ndarray,
    det_a:      np.ndarray,
    det_b:      np.ndarray,
    sample:     Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, Dict[SettingPair, np.ndarray]]:
    """
    select key rounds and CHSH subsets from the public announcements

    :param settings_a: alice setting indices
    :param settings_b: bob setting indices
    :param det_a:      alice detection flags
    :param det_b:      bob detection flags
    :param sample:     optional mask of rounds admitted to CHSH
    :return:           (key round mask, {chsh pair: round mask})
    """
    both = np.asarray(det_a, bool) & np.asarray(det_b, bool)
    key  = both & (settings_a == settings_b)
    if sample is not None:
        both = both & sample
    subsets = {
        (j, k): both & (settings_a == j.index) & (settings_b == k.index) for j, k in CHSH_PAIRS
    }
    return key, subsets

def sift(
    messages:  Iterable[ClassicalMessage],
    records_a: Iterable[DetectionRecord],
    records_b: Iterable[DetectionRecord],
) -> Tuple[SiftedKey, SiftedKey, Dict[SettingPair, np.ndarray]]:
    """
    sift both receivers' records using the broadcast announcements

    :param messages:  every announcement of the round range
    :param records_a: alice's private records
    :param records_b: bob's private records
    :return:          (alice key, bob key, {chsh pair: rounds})
    """
    announced = {}
    for msg in messages:
        announced[(msg.seq, msg.sender)] = msg
    records_a, records_b = list(records_a), list(records_b)
    seqs = [r.seq for r in records_a]
    if seqs != [r.seq for r in records_b]:
        raise IncompleteTranscript('alice and bob records cover different rounds')
    columns = {role: ([], []) for role in Role}
    for seq in seqs:
        for role in Role:
            msg = announced.get((seq, role))
            if msg is None:
                raise IncompleteTranscript(f'no announcement from {role.label} for round {seq}')
            columns[role][0].append(msg.setting.index)
            columns[role][1].append(msg.detected)
    settings_a, det_a = (np.array(c) for c in columns[Role.ALICE])
    settings_b, det_b = (np.array(c) for c in columns[Role.BOB])
    if not len(seqs):
        settings_a = settings_b = np.zeros(0, np.int8)
        det_a = det_b = np.zeros(0, bool)
    key, subsets = sift_arrays(settings_a, settings_b, det_a, det_b)
    seqs = np.array(seqs, dtype=np.int64)

    def bits(records: list) -> np.ndarray:
        return np.array([r.outcome.code for r, k in zip(records, key) if k], dtype=np.int8)

    return (
        SiftedKey(bits(records_a), seqs[key]),
        SiftedKey(bits(records_b), seqs[key]),
        {pair: seqs[mask] for pair, mask in subsets.items()},
    )

def correlation_grid(
    settings_a: np.ndarray,
    settings_b: np.ndarray,
    outcomes_a: np.ndarray,
    outcomes_b: np.ndarray,
    sample:     Optional[np.ndarray] = None,
) -> Dict[Tuple[int, int], Tuple[int, int]]:
    """
    (same, different) counts of double detections for all 16 setting pairs

    :return: {(j, k): (n_same, n_diff)}
    """
    both = (outcomes_a != NO_DETECT) & (outcomes_b != NO_DETECT)
    if sample is not None:
        both &= sample
    same  = outcomes_a == outcomes_b
    cells = settings_a.astype(np.int64) * 4 + settings_b
    n_same = np.bincount(cells[both & same], minlength=16)
    n_diff = np.bincount(cells[both & ~same], minlength=16)
    return {divmod(c, 4): (int(n_same[c]), int(n_diff[c])) for c in range(16)}

def _code(value: Union[Outcome, int]) -> int:
    return value.code if isinstance(value, Outcome) else int(value)

def estimate_correlation(
    setting_pair: SettingPair,
    outcomes_a:   Sequence[Union[Outcome, int]],
    outcomes_b:   Sequence[Union[Outcome, int]],
) -> CorrelationEstimate:
    """
    correlation of the rounds measured at one setting pair

    :param setting_pair: (alice setting, bob setting)
    :param outcomes_a:   alice outcomes of those rounds
    :param outcomes_b:   bob outcomes of the same rounds
    :return:             estimate over the double detections
    """
    a = np.fromiter((_code(o) for o in outcomes_a), dtype=np.int8)
    b = np.fromiter((_code(o) for o in outcomes_b), dtype=np.int8)
    if len(a) != len(b):
        raise LengthMismatch(len(a), len(b), 'outcome')
    both = (a != NO_DETECT) & (b != NO_DETECT)
    same = int(np.count_nonzero(both & (a == b)))
    diff = int(np.count_nonzero(both & (a != b)))
    return CorrelationEstimate(setting_pair, same, diff)

def _value(estimate: Estimate):
    if isinstance(estimate, CorrelationEstimate):
        return estimate.e_value
    return estimate

def chsh(e_ab: Estimate, e_gb: Estimate, e_gd: Estimate, e_ad: Estimate) -> ChshReport:
    """
    S = |E(a,b) + E(g,b)| + |E(g,d) - E(a,d)|

    :return: report with S (exact when every input is rational)
    """
    cells  = (e_ab, e_gb, e_gd, e_ad)
    ab, gb, gd, ad = (_value(e) for e in cells)
    s      = abs(ab + gb) + abs(gd - ad)
    exact  = s if all(isinstance(v, (Fraction, int)) for v in (ab, gb, gd, ad)) else None
    errors = [e.std_err for e in cells if isinstance(e, CorrelationEstimate)]
    return ChshReport(
        e_ab=e_ab,
        e_gb=e_gb,
        e_gd=e_gd,
        e_ad=e_ad,
        s_value=float(s),
        s_exact=None if exact is None else Fraction(exact),
        std_err=math.sqrt(sum(e * e for e in errors)),
    )

def qber(key_a: KeyLike, key_b: KeyLike) -> float:
    """
    fraction of differing bits between the two sifted keys

    :param key_a: alice key
    :param key_b: bob key
    :return:      bit error rate
    """
    a = np.asarray(key_a.bits if isinstance(key_a, SiftedKey) else key_a)
    b = np.asarray(key_b.bits if isinstance(key_b, SiftedKey) else key_b)
    if len(a) != len(b):
        raise LengthMismatch(len(a), len(b), 'key')
    if not len(a):
        raise EmptyKey('cannot estimate the error rate of an empty key')
    return float(np.count_nonzero(a != b)) / len(a)
