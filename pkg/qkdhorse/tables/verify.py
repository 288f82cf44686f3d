"""
Exhaustive Table Verification
"""
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from . import CHSH_PAIRS, SHIFTS, TablePair, VerificationReport
from ..utils import NO_DETECT, Setting
from ..utils.errors import MismatchedSizes

#** Variables **#
__all__ = ['sweep_counts', 'verify_tables']

#** Functions **#

def sweep_counts(pair: TablePair) -> Dict[Tuple[int, int], Tuple[int, int]]:
    """
    count double detections and disagreements for all 16 setting pairs

    :param pair: tables to sweep over every slot
    :return:     {(j, k): (pairs, disagreements)}
    """
    alice, bob = pair.alice, pair.bob
    if alice.n_slots != bob.n_slots:
        raise MismatchedSizes(f'table sizes differ: {alice.n_slots} != {bob.n_slots}')
    block  = alice.block
    counts = {}
    for j in Setting:
        a = np.roll(alice.entries, -j.index * block)
        for k in Setting:
            b    = np.roll(bob.entries, -k.index * block)
            both = (a != NO_DETECT) & (b != NO_DETECT)
            diff = both & (a != b)
            counts[(j.index, k.index)] = (int(both.sum()), int(diff.sum()))
    return counts

def _correlation(pairs: int, diffs: int) -> Optional[Fraction]:
    if pairs == 0:
        return None
    return Fraction(pairs - 2 * diffs, pairs)

def verify_tables(pair: TablePair) -> VerificationReport:
    """
    recount every constraint over all slots and setting pairs

    :param pair: table pair with its targets
    :return:     report listing every violated constraint
    """
    targets = pair.targets
    counts  = sweep_counts(pair)
    singles = (pair.alice.singles, pair.bob.singles)
    violations = []
    for side, count in zip('AB', singles):
        if count != targets.singles:
            violations.append((f'C1 singles {side}', targets.singles, count))
    for (j, k), (pairs, diffs) in sorted(counts.items()):
        cell = f'{Setting(j).symbol}{Setting(k).symbol}'
        if pairs != targets.pairs:
            violations.append((f'C2 pairs {cell}', targets.pairs, pairs))
        if j == k and diffs:
            violations.append((f'C3 equal {cell}', 0, diffs))
        elif j != k and diffs != targets.d(abs(j - k)):
            violations.append((f'C4 diff {cell}', targets.d(abs(j - k)), diffs))
    # every pair with the same shift sees the same cyclic sweep
    by_shift = {t: counts[(max(0, -t), max(0, -t) + t)] for t in SHIFTS}
    e_pair   = {cell: _correlation(*value) for cell, value in counts.items()}
    e_cells  = [e_pair[(j.index, k.index)] for j, k in CHSH_PAIRS]
    chsh_s   = None
    if all(e is not None for e in e_cells):
        e_ab, e_gb, e_gd, e_ad = e_cells
        chsh_s = abs(e_ab + e_gb) + abs(e_gd - e_ad)
    n = pair.n_slots
    return VerificationReport(
        singles_a=singles[0],
        singles_b=singles[1],
        pairs_by_shift={t: v[0] for t, v in by_shift.items()},
        diff_by_shift={t: v[1] for t, v in by_shift.items()},
        e_by_absdelta={d: e_pair[(0, d)] for d in range(4)},
        e_by_pair=e_pair,
        chsh_s=chsh_s,
        near_independence=abs(by_shift[1][0] / n - (singles[0] / n) * (singles[1] / n)),
        violations=violations,
    )
