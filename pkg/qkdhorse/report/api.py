"""
QkdHorse Report `Session` API
"""
from typing import Any, Callable, Dict, Optional

from fastapi import HTTPException

from . import Context, sections
from ..protocol import SessionTranscript
from ..tables import TablePair
from ..utils import BluePrint
from ..utils.errors import QkdHorseError

#** Variables **#
__all__ = ['api']

api = BluePrint('/api/v1/report/')

Document = Dict[str, Any]

#** Functions **#

def require_transcript() -> SessionTranscript:
    if Context.transcript is None:
        raise HTTPException(status_code=404, detail='no transcript loaded')
    return Context.transcript

def require_tables() -> TablePair:
    if Context.tables is None:
        raise HTTPException(status_code=404, detail='no translation tables loaded')
    return Context.tables

def guarded(build: Callable, *args) -> Document:
    """run a section builder, mapping library errors to 400"""
    try:
        return build(*args)
    except QkdHorseError as e:
        raise HTTPException(status_code=400, detail=str(e))

#** Routes **#

@api.get('/summary')
def report_summary() -> Document:
    """
    headline statistics of the loaded session

    :return: rates, key length, qber and chsh report
    """
    return guarded(sections.summary, require_transcript())

@api.get('/grid')
def report_grid() -> Document:
    """
    correlation estimates for all 16 setting pairs
    """
    return guarded(sections.grid, require_transcript())

@api.get('/audit')
def report_audit() -> Document:
    """
    slot-dependence tests and the efficiency-adjusted bell bound

    :return: audit report json
    """
    return guarded(sections.audit_section, require_transcript(), Context.tables)

@api.get('/tables')
def report_tables() -> Document:
    return guarded(sections.tables_section, require_tables())

@api.get('/attack')
def report_attack() -> Optional[Document]:
    """
    eve's reconstruction of the session key

    :return: accuracy, coverage and reconstructed bit count
    """
    return guarded(sections.attack, require_transcript(), require_tables(), Context.taps)
