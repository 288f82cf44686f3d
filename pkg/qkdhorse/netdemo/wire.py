"""
Line-Based Wire Protocol of the Networked Demo

Every message is one line of compact UTF-8 JSON terminated by LF, tagged
by its ``t`` field. Decoding is strict: unknown or missing fields, wrong
JSON types (booleans are never integers) and out-of-range values are
rejected with the offending line number.
"""
import json
from typing import Dict, Optional, Union

from pyderive.extensions.validate import BaseModel

from ..utils.errors import FormatError

#** Variables **#
__all__ = [
    'ROLES',
    'SYNC_KINDS',
    'MODES',

    'Sync',
    'Pulse',
    'Announce',
    'Done',
    'Hello',
    'Ack',
    'WireMessage',

    'encode',
    'decode',
]

#: peer roles announced in Hello/Ack
ROLES = ('source', 'alice', 'bob', 'eve')

#: initiation kinds carried by Sync
SYNC_KINDS = ('normal', 'activate')

#: receiver modes reported in Ack
MODES = ('qkd', 'trojan')

#** Classes **#

class Sync(BaseModel, compat=True):
    session: int
    n_slots: int
    kind:    str = 'normal'

class Pulse(BaseModel, compat=True):
    q:    int
    slot: int
    pol:  int = 0

class Announce(BaseModel, compat=True):
    q:   int
    det: bool
    set: int

class Done(BaseModel, compat=True):
    count: int

class Hello(BaseModel, compat=True):
    role: str

class Ack(BaseModel, compat=True):
    role:  str
    count: int
    mode:  str

WireMessage = Union[Sync, Pulse, Announce, Done, Hello, Ack]

#: tag -> (message class, {field: json type})
SCHEMA: Dict[str, tuple] = {
    'sync':  (Sync, {'session': int, 'n_slots': int, 'kind': str}),
    'pulse': (Pulse, {'q': int, 'slot': int, 'pol': int}),
    'ann':   (Announce, {'q': int, 'det': bool, 'set': int}),
    'done':  (Done, {'count': int}),
    'hello': (Hello, {'role': str}),
    'ack':   (Ack, {'role': str, 'count': int, 'mode': str}),
}

TAGS = {cls: tag for tag, (cls, _) in SCHEMA.items()}

#: allowed values for enumerated fields
CHOICES = {
    ('sync', 'kind'):  SYNC_KINDS,
    ('hello', 'role'): ROLES,
    ('ack', 'role'):   ROLES,
    ('ack', 'mode'):   MODES,
    ('pulse', 'pol'):  (0, 1),
    ('ann', 'set'):    (0, 1, 2, 3),
}

#** Functions **#

def encode(msg: WireMessage) -> bytes:
    """
    serialize a message as one LF-terminated line

    :param msg: message to encode
    :return:    utf-8 line
    """
    tag  = TAGS[type(msg)]
    body = {'t': tag}
    for name in SCHEMA[tag][1]:
        body[name] = getattr(msg, name)
    return (json.dumps(body, separators=(',', ':')) + '\n').encode('utf-8')

def decode(line: Union[bytes, str], lineno: Optional[int] = None) -> WireMessage:
    """
    parse and validate one wire line

    :param line:   raw line (trailing LF optional)
    :param lineno: 1-based line number reported on errors
    :return:       decoded message
    """
    lineno = lineno or 0
    if isinstance(line, bytes):
        try:
            line = line.decode('utf-8')
        except UnicodeDecodeError:
            raise FormatError(lineno, 'line is not valid utf-8') from None
    if line.endswith('\n'):
        line = line[:-1]
    if '\n' in line:
        raise FormatError(lineno, 'embedded line feed')
    try:
        body = json.loads(line)
    except json.JSONDecodeError as e:
        raise FormatError(lineno, f'invalid json: {e.msg}') from None
    if not isinstance(body, dict):
        raise FormatError(lineno, 'message must be a json object')
    tag = body.pop('t', None)
    if tag not in SCHEMA:
        raise FormatError(lineno, f'unknown message type: {tag!r}')
    cls, fields = SCHEMA[tag]
    if set(body) != set(fields):
        extra   = sorted(set(body) - set(fields))
        missing = sorted(set(fields) - set(body))
        raise FormatError(lineno, f'{tag}: unexpected {extra} missing {missing}')
    for name, kind in fields.items():
        value = body[name]
        if type(value) is not kind:
            raise FormatError(lineno, f'{tag}.{name} must be {kind.__name__}')
        if kind is int and value < 0:
            raise FormatError(lineno, f'{tag}.{name} must be non-negative')
        choices = CHOICES.get((tag, name))
        if choices is not None and value not in choices:
            raise FormatError(lineno, f'{tag}.{name} must be one of {choices}')
    return cls(**body)
