"""
Counter-Addressed Random Streams
"""
import zlib
from functools import lru_cache

import numpy as np

#** Variables **#
__all__ = ['BLOCK', 'derive_seed', 'SeedStream']

#: draws generated per cached block
BLOCK = 1 << 14

#: mask for 64-bit seeds
MASK64 = (1 << 64) - 1

#** Functions **#

def _label_id(label: str) -> int:
    return zlib.crc32(label.encode('utf-8'))

def derive_seed(seed: int, label: str) -> int:
    """
    derive an independent 64-bit component seed from a master seed

    :param seed:  master seed
    :param label: component name (``channel``, ``alice``, ``bob``)
    :return:      derived 64-bit seed
    """
    ss = np.random.SeedSequence(entropy=seed & MASK64, spawn_key=(_label_id(label), ))
    return int(ss.generate_state(1, dtype=np.uint64)[0])

@lru_cache(maxsize=64)
def _block(seed: int, label_id: int, index: int) -> np.ndarray:
    ss    = np.random.SeedSequence(entropy=seed, spawn_key=(label_id, index))
    block = np.random.default_rng(ss).random(BLOCK)
    block.flags.writeable = False
    return block

#** Classes **#

class SeedStream:
    """
    uniform draws addressed by round number

    the value drawn for ``seq`` depends only on (seed, label, seq), so a
    round can be evaluated alone, in a batch, or in any order
    """

    def __init__(self, seed: int, label: str):
        self.seed     = seed & MASK64
        self.label    = label
        self.label_id = _label_id(label)

    def __repr__(self) -> str:
        return f'SeedStream(seed={self.seed}, label={self.label!r})'

    def uniform(self, seq: int) -> float:
        """
        uniform draw on [0, 1) for a single round

        :param seq: round counter
        :return:    uniform float
        """
        index, offset = divmod(int(seq), BLOCK)
        return float(_block(self.seed, self.label_id, index)[offset])

    def uniforms(self, seqs: np.ndarray) -> np.ndarray:
        """
        uniform draws on [0, 1) for many rounds at once

        :param seqs: round counters (any order, repeats allowed)
        :return:     float64 array aligned with ``seqs``
        """
        seqs = np.asarray(seqs, dtype=np.int64)
        out  = np.empty(seqs.shape, dtype=np.float64)
        if seqs.size == 0:
            return out
        index  = seqs // BLOCK
        offset = seqs % BLOCK
        for block in np.unique(index):
            mask      = index == block
            out[mask] = _block(self.seed, self.label_id, int(block))[offset[mask]]
        return out

    def integers(self, seqs: np.ndarray, high: int) -> np.ndarray:
        """
        uniform integers on ``0..high-1`` for many rounds

        :param seqs: round counters
        :param high: exclusive upper bound
        :return:     int64 array aligned with ``seqs``
        """
        values = np.floor(self.uniforms(seqs) * high).astype(np.int64)
        return np.minimum(values, high - 1)
