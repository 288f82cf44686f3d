"""
Read-Only Report Service over a Finished Session
"""
import logging
from typing import Callable, Mapping, Optional

from fastapi import FastAPI

from ..protocol import SessionTranscript
from ..tables import TablePair
from ..utils.errors import QkdHorseError

#** Variables **#
__all__ = ['webapp', 'Context', 'build_report']

logger = logging.getLogger(__name__)

#: fastapi app instance
webapp = FastAPI(title='qkdhorse report')

#** Classes **#

class Context:
    """global library var container holding the artifacts being served"""
    transcript: Optional[SessionTranscript] = None
    tables:     Optional[TablePair] = None
    taps:       Optional[Mapping[int, int]] = None

    @classmethod
    def configure(cls,
        transcript: Optional[SessionTranscript] = None,
        tables:     Optional[TablePair] = None,
        taps:       Optional[Mapping[int, int]] = None,
    ):
        cls.transcript = transcript
        cls.tables     = tables
        cls.taps       = taps

#** Functions **#

def _section(build: Callable, *args) -> dict:
    try:
        return build(*args)
    except QkdHorseError as e:
        logger.info('%s unavailable: %s', build.__name__, e)
        return {'error': str(e)}

def build_report(
    transcript: SessionTranscript,
    tables:     Optional[TablePair] = None,
    taps:       Optional[Mapping[int, int]] = None,
) -> dict:
    """
    combined document of every report section

    :param transcript: session transcript
    :param tables:     translation tables, when known
    :param taps:       eve's polarization tap, when recorded
    :return:           {section: content}; failed sections hold an error
    """
    report = {
        'summary': _section(sections.summary, transcript),
        'grid':    _section(sections.grid, transcript),
        'audit':   _section(sections.audit_section, transcript, tables),
        'tables':  None,
        'attack':  None,
    }
    if tables is not None:
        report['tables'] = _section(sections.tables_section, tables)
        report['attack'] = _section(sections.attack, transcript, tables, taps)
    return report

#** Init **#

from . import sections
from .api import api

api.apply_blueprint(webapp)
