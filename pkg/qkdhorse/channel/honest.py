"""
Honest Entangled-Pair Backend
"""
from typing import Tuple

import numpy as np

from . import AGREE_STREAM, BIT_STREAM, Backend, ChannelConfig, ResolvedRound
from ..utils import NO_DETECT, Outcome, Role, Setting
from ..utils.errors import WrongBackend

#** Variables **#
__all__ = ['quantum_outcomes', 'resolve_honest', 'resolve_honest_batch']

#** Functions **#

def quantum_outcomes(
    config:     ChannelConfig,
    seqs:       np.ndarray,
    settings_a: np.ndarray,
    settings_b: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    measure entangled pairs: E(delta) = cos(2 * delta) in expectation

    the joint distribution is sampled at resolution time; any backend's
    devices in QKD mode see these outcomes

    :param config:     channel configuration (eta and seed)
    :param seqs:       round counters
    :param settings_a: alice setting indices
    :param settings_b: bob setting indices
    :return:           (alice codes, bob codes)
    """
    seqs   = np.asarray(seqs, dtype=np.int64)
    delta  = np.radians(22.5 * np.abs(np.asarray(settings_a) - np.asarray(settings_b)))
    bit_a  = (config.stream(BIT_STREAM).uniforms(seqs) < 0.5).astype(np.int8)
    agree  = config.stream(AGREE_STREAM).uniforms(seqs) < np.cos(delta) ** 2
    bit_b  = np.where(agree, bit_a, 1 - bit_a).astype(np.int8)
    seen_a = config.arm_stream('eta', Role.ALICE).uniforms(seqs) < config.eta
    seen_b = config.arm_stream('eta', Role.BOB).uniforms(seqs) < config.eta
    return (np.where(seen_a, bit_a, NO_DETECT).astype(np.int8),
            np.where(seen_b, bit_b, NO_DETECT).astype(np.int8))

def resolve_honest_batch(
    config:     ChannelConfig,
    seqs:       np.ndarray,
    settings_a: np.ndarray,
    settings_b: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """vectorized `resolve_honest` returning outcome codes"""
    if config.backend is not Backend.HONEST:
        raise WrongBackend(f'honest resolution on {config.backend.value} backend')
    return quantum_outcomes(config, seqs, settings_a, settings_b)

def resolve_honest(config: ChannelConfig, seq: int, setting_a: Setting, setting_b: Setting) -> ResolvedRound:
    """
    resolve one honest round

    :param config:    honest channel configuration
    :param seq:       round counter
    :param setting_a: alice setting
    :param setting_b: bob setting
    :return:          both outcomes
    """
    a, b = resolve_honest_batch(config, np.array([seq]),
        np.array([Setting(setting_a)]), np.array([Setting(setting_b)]))
    return ResolvedRound(seq, Outcome.from_code(a[0]), Outcome.from_code(b[0]))
