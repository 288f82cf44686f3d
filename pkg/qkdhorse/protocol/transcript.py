"""
Newline-Delimited JSON Transcript Export

one object per round, keys in fixed order:
``{"q":<seq>,"slot":<int|null>,"sa":<0-3>,"sb":<0-3>,"oa":<o>,"ob":<o>}``
with outcomes ``"0"``, ``"1"``, ``"."`` (NoDetect) or ``"?"`` (detected,
value held privately by the other receiver)
"""
import json
import logging
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from . import SessionTranscript
from ..utils import NO_DETECT, ONE, PRIVATE, ZERO, Role
from ..utils.errors import FormatError, IncompleteTranscript

#** Variables **#
__all__ = [
    'KEYS',
    'iter_lines',
    'dumps_transcript',
    'loads_transcript',
    'export_transcript',
    'import_transcript',
    'merge_transcripts',
    'private_view',
]

logger = logging.getLogger(__name__)

#: keys of every round object, in output order
KEYS = ('q', 'slot', 'sa', 'sb', 'oa', 'ob')

#: outcome code <-> character
CHARS = {ZERO: '0', ONE: '1', NO_DETECT: '.', PRIVATE: '?'}
CODES = {v: k for k, v in CHARS.items()}

PathLike = Union[str, Path]

#** Functions **#

def iter_lines(transcript: SessionTranscript) -> Iterator[str]:
    """
    render the transcript round by round

    :param transcript: transcript to render
    :return:           json lines without terminators
    """
    columns = zip(
        transcript.seqs.tolist(),
        transcript.slots.tolist(),
        transcript.settings_a.tolist(),
        transcript.settings_b.tolist(),
        transcript.outcomes_a.tolist(),
        transcript.outcomes_b.tolist(),
    )
    for q, slot, sa, sb, oa, ob in columns:
        record = {
            'q':    q,
            'slot': slot if slot >= 0 else None,
            'sa':   sa,
            'sb':   sb,
            'oa':   CHARS[oa],
            'ob':   CHARS[ob],
        }
        yield json.dumps(record, separators=(',', ':'))

def dumps_transcript(transcript: SessionTranscript) -> str:
    return ''.join(line + '\n' for line in iter_lines(transcript))

def _int(record: dict, key: str, lineno: int, low: int, high: Optional[int] = None) -> int:
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(lineno, f'{key!r} must be an integer')
    if value < low or (high is not None and value > high):
        raise FormatError(lineno, f'{key!r} out of range: {value}')
    return value

def loads_transcript(lines: Iterable[str], n_slots: Optional[int] = None) -> SessionTranscript:
    """
    parse transcript lines

    :param lines:   json lines (terminators optional)
    :param n_slots: table size the slots refer to, when known
    :return:        transcript rebuilt from the rounds
    """
    cols = {key: [] for key in KEYS}
    last = -1
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip('\n')
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(lineno, f'invalid json: {e.msg}') from None
        if not isinstance(record, dict) or set(record) != set(KEYS):
            raise FormatError(lineno, f'expected exactly the keys {", ".join(KEYS)}')
        q = _int(record, 'q', lineno, 0)
        if q <= last:
            raise FormatError(lineno, f'round {q} out of order after {last}')
        last = q
        slot = -1 if record['slot'] is None else _int(record, 'slot', lineno, 0)
        cols['q'].append(q)
        cols['slot'].append(slot)
        cols['sa'].append(_int(record, 'sa', lineno, 0, 3))
        cols['sb'].append(_int(record, 'sb', lineno, 0, 3))
        for key in ('oa', 'ob'):
            if record[key] not in CODES:
                raise FormatError(lineno, f'{key!r} must be one of 0, 1, ., ?')
            cols[key].append(CODES[record[key]])
    return SessionTranscript(
        seqs=np.array(cols['q'], dtype=np.int64),
        slots=np.array(cols['slot'], dtype=np.int64),
        settings_a=np.array(cols['sa'], dtype=np.int8),
        settings_b=np.array(cols['sb'], dtype=np.int8),
        outcomes_a=np.array(cols['oa'], dtype=np.int8),
        outcomes_b=np.array(cols['ob'], dtype=np.int8),
        n_slots=n_slots,
    )

def export_transcript(transcript: SessionTranscript, path: PathLike):
    """
    write the transcript file

    :param transcript: transcript to write
    :param path:       destination path
    """
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for line in iter_lines(transcript):
            f.write(line + '\n')
    logger.debug('exported %d rounds to %s', len(transcript), path)

def import_transcript(path: PathLike, n_slots: Optional[int] = None) -> SessionTranscript:
    """
    read a transcript file

    :param path:    source path
    :param n_slots: table size the slots refer to, when known
    :return:        parsed transcript
    """
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return loads_transcript(f, n_slots)

def private_view(transcript: SessionTranscript, role: Role) -> SessionTranscript:
    """
    what one receiver knows: its own outcomes, the peer's only as detected/NoDetect

    :param transcript: full transcript
    :param role:       receiver whose view is kept
    :return:           transcript with the peer's detected outcomes hidden
    """
    peer = transcript.outcomes(role.peer())
    hidden = np.where(peer != NO_DETECT, PRIVATE, NO_DETECT).astype(np.int8)
    own = transcript.outcomes(role)
    return SessionTranscript(
        seqs=transcript.seqs,
        slots=transcript.slots,
        settings_a=transcript.settings_a,
        settings_b=transcript.settings_b,
        outcomes_a=own if role is Role.ALICE else hidden,
        outcomes_b=hidden if role is Role.ALICE else own,
        n_slots=transcript.n_slots,
    )

def merge_transcripts(alice: SessionTranscript, bob: SessionTranscript) -> SessionTranscript:
    """
    combine both receivers' files into the full transcript

    :param alice: transcript written by alice
    :param bob:   transcript written by bob
    :return:      transcript with both outcome columns known
    """
    same = (
        np.array_equal(alice.seqs, bob.seqs)
        and np.array_equal(alice.slots, bob.slots)
        and np.array_equal(alice.settings_a, bob.settings_a)
        and np.array_equal(alice.settings_b, bob.settings_b)
    )
    if not same:
        raise IncompleteTranscript('receiver transcripts describe different rounds')
    if (alice.outcomes_a == PRIVATE).any() or (bob.outcomes_b == PRIVATE).any():
        raise IncompleteTranscript('a receiver transcript hides its own outcomes')
    if not np.array_equal(alice.detected(Role.BOB), bob.detected(Role.BOB)) \
            or not np.array_equal(alice.detected(Role.ALICE), bob.detected(Role.ALICE)):
        raise IncompleteTranscript('detection flags disagree between the receiver transcripts')
    return SessionTranscript(
        seqs=alice.seqs,
        slots=alice.slots,
        settings_a=alice.settings_a,
        settings_b=alice.settings_b,
        outcomes_a=alice.outcomes_a,
        outcomes_b=bob.outcomes_b,
        n_slots=alice.n_slots or bob.n_slots,
    )
