"""
Time-Slot Trojan Backends (plain and polarization-masked)
"""
from typing import Tuple

import numpy as np

from . import ChannelConfig, PulseEvent, ResolvedRound
from ..tables import TablePair, TranslationTable, lookup_many
from ..utils import NO_DETECT, Outcome, Setting
from ..utils.errors import WrongBackend

#** Variables **#
__all__ = ['resolve_arm', 'resolve_arm_batch', 'resolve_trojan', 'resolve_trojan_batch']

#** Functions **#

def _require_trojan(config: ChannelConfig):
    if not config.trojan:
        raise WrongBackend(f'trojan resolution on {config.backend.value} backend')

def resolve_arm_batch(
    config:   ChannelConfig,
    table:    TranslationTable,
    seqs:     np.ndarray,
    slots:    np.ndarray,
    polbits:  np.ndarray,
    settings: np.ndarray,
) -> np.ndarray:
    """
    one receiver's table lookups; reads nothing from the other arm

    :param config:   channel configuration (eta, noise, masking, seed)
    :param table:    the receiver's own table
    :param seqs:     round counters
    :param slots:    received slots
    :param polbits:  received polarization bits (masked backend)
    :param settings: the receiver's own setting indices
    :return:         outcome codes
    """
    seqs  = np.asarray(seqs, dtype=np.int64)
    codes = lookup_many(table, slots, settings).astype(np.int8)
    if config.eta < 1.0:
        seen  = config.arm_stream('eta', table.role).uniforms(seqs) < config.eta
        codes = np.where(seen, codes, NO_DETECT).astype(np.int8)
    detected = codes != NO_DETECT
    if config.masked:
        codes = np.where(detected, codes ^ np.asarray(polbits, dtype=np.int8), codes)
    if config.noise_q > 0.0:
        flip  = config.arm_stream('noise', table.role).uniforms(seqs) < config.noise_q
        codes = np.where(detected & flip, 1 - codes, codes)
    return codes.astype(np.int8)

def resolve_arm(config: ChannelConfig, table: TranslationTable, pulse: PulseEvent, setting: Setting) -> Outcome:
    """single-round form of `resolve_arm_batch`"""
    _require_trojan(config)
    code = resolve_arm_batch(config, table, np.array([pulse.seq]),
        np.array([pulse.slot]), np.array([pulse.polbit]), np.array([Setting(setting)]))
    return Outcome.from_code(code[0])

def resolve_trojan_batch(
    config:     ChannelConfig,
    tables:     TablePair,
    seqs:       np.ndarray,
    slots:      np.ndarray,
    polbits:    np.ndarray,
    settings_a: np.ndarray,
    settings_b: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    """vectorized `resolve_trojan` returning outcome codes"""
    _require_trojan(config)
    return (resolve_arm_batch(config, tables.alice, seqs, slots, polbits, settings_a),
            resolve_arm_batch(config, tables.bob, seqs, slots, polbits, settings_b))

def resolve_trojan(
    config:    ChannelConfig,
    tables:    TablePair,
    pulse:     PulseEvent,
    setting_a: Setting,
    setting_b: Setting,
) -> ResolvedRound:
    """
    resolve one Trojan round through both translation tables

    :param config:    trojan channel configuration
    :param tables:    table pair
    :param pulse:     emitted pulse
    :param setting_a: alice setting
    :param setting_b: bob setting
    :return:          both outcomes
    """
    _require_trojan(config)
    return ResolvedRound(
        pulse.seq,
        resolve_arm(config, tables.alice, pulse, setting_a),
        resolve_arm(config, tables.bob, pulse, setting_b),
    )
