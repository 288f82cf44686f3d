"""
Report Sections computed from Session Artifacts
"""
from typing import Mapping, Optional

from ..analysis import audit
from ..eve import EveKnowledge, reconstruct_key, score_attack
from ..protocol import SessionTranscript
from ..tables import TablePair, verify_tables

#** Variables **#
__all__ = ['summary', 'grid', 'audit_section', 'tables_section', 'attack']

#** Functions **#

def summary(transcript: SessionTranscript) -> dict:
    return transcript.summary()

def grid(transcript: SessionTranscript) -> dict:
    """all 16 correlation cells keyed by their setting symbols"""
    cells = {}
    for (j, k), estimate in sorted(transcript.grid.items()):
        cells[f'{j.symbol}{k.symbol}'] = None if estimate is None else estimate.to_dict()
    return cells

def audit_section(transcript: SessionTranscript, tables: Optional[TablePair] = None) -> dict:
    return audit(transcript, tables).to_dict()

def tables_section(tables: TablePair) -> dict:
    return verify_tables(tables).to_dict()

def attack(
    transcript: SessionTranscript,
    tables:     TablePair,
    taps:       Optional[Mapping[int, int]] = None,
) -> dict:
    """
    eve's reconstruction graded against alice's key, without the bits

    :param transcript: full session transcript
    :param tables:     eve's copy of the tables
    :param taps:       polarization tap of a masked session
    :return:           accuracy, coverage and reconstructed bit count
    """
    knowledge = EveKnowledge.observe(transcript, tables)
    knowledge.pol_taps = taps
    report = score_attack(reconstruct_key(knowledge), transcript.key_a)
    return {
        'accuracy':      report.accuracy_vs_alice,
        'coverage':      report.coverage,
        'reconstructed': len(report.reconstructed_bits),
    }
