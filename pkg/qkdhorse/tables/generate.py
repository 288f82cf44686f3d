"""
Constraint-Based Translation-Table Generation

Both tables share the result band (One on the lower half of the slots,
Zero above it), so equal settings can never disagree. What remains is to
choose the NoDetect gaps. Slots are grouped into ``block`` cyclic fibers
``{u + j*block : j = 0..7}``; a setting shift moves a slot along its own
fiber, so every count decomposes into a sum of per-fiber counts. A fiber
plan picks gap patterns whose per-fiber counts add up to the targets
exactly. When no plan exists the layout is repaired by annealing.
"""
import math
import logging
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from pyderive import dataclass, field

from . import SHIFTS, TablePair, TableTargets, TranslationTable, band
from ..utils import NO_DETECT, Role
from ..utils.rng import MASK64
from ..utils.errors import SearchExhausted

#** Variables **#
__all__ = [
    'DEFAULT_MAX_ITERS',
    'FiberKind',
    'FiberPlan',
    'plan_fibers',
    'layout_plan',
    'constraint_cost',
    'generate_tables',
]

logger = logging.getLogger(__name__)

#: default annealing budget
DEFAULT_MAX_ITERS = 2_000_000

#: spawn key separating the generator stream from session streams
GEN_STREAM = 0x7AB1E5

#: detection masks over fiber positions 0..7 (bit j set = detected)
FULL  = 0xFF
INNER = 0x66 # {1,2,5,6}
EDGE  = 0xF6 # gaps {0,3}
MID   = 0xF9 # gaps {1,2}

#** Classes **#

class FiberKind(NamedTuple):
    name:   str
    mask_a: int
    mask_b: int

#: one-sided kinds; every shift sees the same per-fiber counts
F_FULL   = FiberKind('full', FULL, FULL)         # pairs 8, d1 2
D_INNER  = FiberKind('inner-a', INNER, FULL)     # pairs 4, d1 0
D_INNER_ = FiberKind('inner-b', FULL, INNER)
H_EDGE   = FiberKind('edge-a', EDGE, FULL)       # pairs 6, d1 1
H_EDGE_  = FiberKind('edge-b', FULL, EDGE)
G_MID    = FiberKind('mid-a', MID, FULL)         # pairs 6, d1 2
G_MID_   = FiberKind('mid-b', FULL, MID)

def singles_kind(side: Role, count: int) -> FiberKind:
    """fiber detecting ``count`` slots on one side and nothing on the other"""
    mask = (1 << count) - 1
    if side is Role.ALICE:
        return FiberKind(f'singles-a{count}', mask, 0)
    return FiberKind(f'singles-b{count}', 0, mask)

@dataclass
class FiberPlan:
    kinds: List[Tuple[FiberKind, int]] = field(default_factory=list)
    exact: bool = True

    @property
    def fibers(self) -> int:
        return sum(count for _, count in self.kinds)

    def add(self, kind: FiberKind, count: int):
        if count > 0:
            self.kinds.append((kind, count))

#** Functions **#

def _add_singles(plan: FiberPlan, side: Role, extra: int):
    full, rest = divmod(extra, 8)
    plan.add(singles_kind(side, 8), full)
    plan.add(singles_kind(side, rest), 1 if rest else 0)

def plan_fibers(targets: TableTargets) -> Optional[FiberPlan]:
    """
    solve the per-fiber decomposition of the targets in closed form

    :param targets: count constraints to meet
    :return:        exact fiber plan, or None when no plan of this shape fits
    """
    n, s, p = targets.n_slots, targets.singles, targets.pairs
    d1, fibers = targets.d(1), n // 8
    odd  = d1 % 2
    mid  = odd
    full = (d1 - odd) // 2 - mid
    rest = p - 4 * d1 - 2 * odd + 2 * mid
    if full < 0 or rest < 0 or rest % 4:
        return None
    inner = rest // 4
    spare = 2 * s - 3 * p + 4 * d1 - 4 * mid
    if spare < 0:
        return None
    # balance Alice/Bob singles (delta = a - b) across variant choices
    inner_a = inner // 2
    inner_b = inner - inner_a
    delta   = 4 * (inner_b - inner_a)
    plan    = FiberPlan()
    plan.add(F_FULL, full)
    plan.add(D_INNER, inner_a)
    plan.add(D_INNER_, inner_b)
    for kinds in ((H_EDGE, H_EDGE_), ) * odd + ((G_MID, G_MID_), ) * mid:
        if delta > 0:
            plan.add(kinds[0], 1)
            delta -= 2
        else:
            plan.add(kinds[1], 1)
            delta += 2
    if spare < abs(delta):
        return None
    _add_singles(plan, Role.ALICE, (spare - delta) // 2)
    _add_singles(plan, Role.BOB, (spare + delta) // 2)
    if plan.fibers > fibers:
        return None
    return plan

def _approximate_plan(targets: TableTargets) -> FiberPlan:
    """warm start for the annealer when no exact plan exists"""
    fibers = targets.n_slots // 8
    full   = min(targets.d(1) // 2, fibers)
    inner  = min(max(0, (targets.pairs - 8 * full) // 4), fibers - full)
    plan   = FiberPlan(exact=False)
    plan.add(F_FULL, full)
    plan.add(D_INNER, inner // 2)
    plan.add(D_INNER_, inner - inner // 2)
    return plan

def layout_plan(plan: FiberPlan, n_slots: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    place the planned fibers at seeded positions

    :param plan:    fiber plan to lay out
    :param n_slots: table size
    :param rng:     seeded generator choosing the fiber order
    :return:        (alice detected mask, bob detected mask)
    """
    fibers  = n_slots // 8
    order   = rng.permutation(fibers)
    masks_a = np.zeros(fibers, dtype=np.uint16)
    masks_b = np.zeros(fibers, dtype=np.uint16)
    pos = 0
    for kind, count in plan.kinds:
        chosen = order[pos:pos + count]
        masks_a[chosen] = kind.mask_a
        masks_b[chosen] = kind.mask_b
        pos += count
    # slot u + j*block lives at row j, column u
    bits  = np.arange(8, dtype=np.uint16)[:, None]
    det_a = ((masks_a[None, :] >> bits) & 1).astype(bool).reshape(-1)
    det_b = ((masks_b[None, :] >> bits) & 1).astype(bool).reshape(-1)
    return det_a, det_b

def _mismatch(n_slots: int) -> dict:
    """per shift: does the band differ between x and x + shift*block"""
    block, result = n_slots // 8, band(n_slots)
    return {t: result != np.roll(result, -t * block) for t in SHIFTS}

def constraint_cost(targets: TableTargets, det_a: np.ndarray, det_b: np.ndarray) -> int:
    """
    total integer violation of the singles/pairs/disagreement targets

    :param targets: count constraints
    :param det_a:   alice detected mask
    :param det_b:   bob detected mask
    :return:        sum of absolute count errors (0 when satisfied)
    """
    block = targets.n_slots // 8
    mism  = _mismatch(targets.n_slots)
    cost  = abs(int(det_a.sum()) - targets.singles) + abs(int(det_b.sum()) - targets.singles)
    for t in SHIFTS:
        both  = det_a & np.roll(det_b, -t * block)
        cost += abs(int(both.sum()) - targets.pairs)
        cost += abs(int((both & mism[t]).sum()) - targets.d(abs(t)))
    return cost

#** Classes **#

class Annealer:
    """
    seeded simulated annealing over the two gap sets

    moves swap a gap with a detection on one side (singles preserved) or
    toggle a single slot; counts are maintained incrementally
    """
    CHUNK    = 1 << 16
    PATIENCE = 50_000

    def __init__(self, targets: TableTargets, det_a: np.ndarray, det_b: np.ndarray, rng: np.random.Generator):
        self.targets = targets
        self.n       = targets.n_slots
        self.block   = self.n // 8
        self.rng     = rng
        self.det     = [bytearray(det_a.astype(np.uint8).tobytes()),
                        bytearray(det_b.astype(np.uint8).tobytes())]
        mism = _mismatch(self.n)
        self.mism = {t: bytearray(mism[t].astype(np.uint8).tobytes()) for t in SHIFTS}
        self.singles = [int(det_a.sum()), int(det_b.sum())]
        self.pairs   = {}
        self.diffs   = {}
        for t in SHIFTS:
            both = det_a & np.roll(det_b, -t * self.block)
            self.pairs[t] = int(both.sum())
            self.diffs[t] = int((both & mism[t]).sum())
        self._draws = iter(())
        self.best   = None

    def cost(self) -> int:
        s, p = self.targets.singles, self.targets.pairs
        total = abs(self.singles[0] - s) + abs(self.singles[1] - s)
        for t in SHIFTS:
            total += abs(self.pairs[t] - p) + abs(self.diffs[t] - self.targets.d(abs(t)))
        return total

    def toggle(self, side: int, x: int):
        det  = self.det[side]
        sign = -1 if det[x] else 1
        det[x] ^= 1
        self.singles[side] += sign
        other = self.det[1 - side]
        for t in SHIFTS:
            # alice slot ``a`` pairs with bob slot ``a + t*block``
            if side == 0:
                a, partner = x, (x + t * self.block) % self.n
            else:
                a = partner = (x - t * self.block) % self.n
            if other[partner]:
                self.pairs[t] += sign
                if self.mism[t][a]:
                    self.diffs[t] += sign

    def _draw(self) -> float:
        try:
            return next(self._draws)
        except StopIteration:
            self._draws = iter(self.rng.random(self.CHUNK).tolist())
            return next(self._draws)

    def _slot(self, side: int, detected: bool) -> int:
        det = self.det[side]
        while True:
            x = int(self._draw() * self.n)
            if bool(det[x]) is detected:
                return x

    def _snapshot(self) -> tuple:
        return ([bytearray(d) for d in self.det], list(self.singles),
                dict(self.pairs), dict(self.diffs))

    def _restore(self, snap: tuple):
        det, singles, pairs, diffs = snap
        self.det     = [bytearray(d) for d in det]
        self.singles = list(singles)
        self.pairs   = dict(pairs)
        self.diffs   = dict(diffs)

    def run(self, max_iters: int, t_start: float = 1.0, t_end: float = 0.05) -> bool:
        """
        anneal until every constraint holds or the budget is spent

        :param max_iters: proposal budget
        :param t_start:   initial temperature
        :param t_end:     final temperature
        :return:          True when the cost reached zero
        """
        cost = self.best = self.cost()
        best, best_snap, stale = cost, self._snapshot(), 0
        if cost == 0:
            return True
        decay = (t_end / t_start) ** (1 / max(max_iters, 1))
        temp  = t_start
        for step in range(max_iters):
            side = 0 if self._draw() < 0.5 else 1
            if self._draw() < 0.8 and 0 < self.singles[side] < self.n:
                moves = (self._slot(side, True), self._slot(side, False))
            else:
                moves = (int(self._draw() * self.n), )
            for x in moves:
                self.toggle(side, x)
            new = self.cost()
            delta = new - cost
            if delta <= 0 or self._draw() < math.exp(-delta / temp):
                cost = new
            else:
                for x in reversed(moves):
                    self.toggle(side, x)
            if cost < best:
                best, best_snap, stale = cost, self._snapshot(), 0
                if best == 0:
                    logger.debug('annealing converged after %d proposals', step + 1)
                    return True
            else:
                stale += 1
                if stale >= self.PATIENCE:
                    self._restore(best_snap)
                    cost, stale = best, 0
            temp *= decay
        self._restore(best_snap)
        self.best = best
        return False

    def masks(self) -> Tuple[np.ndarray, np.ndarray]:
        return tuple(np.frombuffer(bytes(d), dtype=np.uint8).astype(bool) for d in self.det)

#** Functions **#

def generate_tables(targets: TableTargets, seed: int, max_iters: int = DEFAULT_MAX_ITERS) -> TablePair:
    """
    generate a table pair meeting every count constraint

    :param targets:   count constraints (singles, pairs, disagreements)
    :param seed:      64-bit seed; equal inputs give identical tables
    :param max_iters: annealing budget when no exact fiber plan exists
    :return:          table pair passing `verify_tables`
    """
    targets.check()
    rng  = np.random.default_rng(np.random.SeedSequence(seed & MASK64, spawn_key=(GEN_STREAM, )))
    plan = plan_fibers(targets)
    if plan is None:
        logger.info('no exact fiber plan for N=%d, annealing from a warm start', targets.n_slots)
        plan = _approximate_plan(targets)
    det_a, det_b = layout_plan(plan, targets.n_slots, rng)
    if not plan.exact:
        annealer = Annealer(targets, det_a, det_b, rng)
        if not annealer.run(max_iters):
            raise SearchExhausted(max_iters, annealer.best)
        det_a, det_b = annealer.masks()
    result = band(targets.n_slots)
    tables = [
        TranslationTable(targets.n_slots, role, np.where(det, result, NO_DETECT))
        for role, det in ((Role.ALICE, det_a), (Role.BOB, det_b))
    ]
    logger.info('generated tables N=%d seed=%d from %d fibers',
        targets.n_slots, seed, plan.fibers)
    return TablePair(tables[0], tables[1], targets, seed)
