"""
Translation-Table File Format

```
QKDHORSE-TABLE v1 N=<n_slots> ROLE=<A|B>
<1000 characters of 0/1/.>   (N/1000 lines, slots ascending)
END
```
"""
import re
import logging
from typing import Union
from pathlib import Path

import numpy as np

from . import BASE_SLOTS, TranslationTable
from ..utils import NO_DETECT, ONE, ZERO, Role
from ..utils.errors import FormatError, LengthMismatch, RoleMissing

#** Variables **#
__all__ = ['LINE_WIDTH', 'dumps_table', 'loads_table', 'save_table', 'load_table']

logger = logging.getLogger(__name__)

#: characters per data line
LINE_WIDTH = 1000

#: header with an optional role field (missing role is its own error)
HEADER = re.compile(r'^QKDHORSE-TABLE v1 N=(\d+)(?: ROLE=(\S*))?$')

#: code point -> outcome code (-2 marks invalid characters)
DECODE = np.full(256, -2, dtype=np.int8)
DECODE[ord('0')] = ZERO
DECODE[ord('1')] = ONE
DECODE[ord('.')] = NO_DETECT

#: outcome code -> character
ENCODE = {ZERO: '0', ONE: '1', NO_DETECT: '.'}

PathLike = Union[str, Path]

#** Functions **#

def dumps_table(table: TranslationTable) -> str:
    """
    render a table in the line-based file format

    :param table: table to render
    :return:      file content, LF terminated
    """
    chars = ''.join(ENCODE[int(c)] for c in table.entries)
    lines = [f'QKDHORSE-TABLE v1 N={table.n_slots} ROLE={table.role.value}']
    lines.extend(chars[i:i + LINE_WIDTH] for i in range(0, len(chars), LINE_WIDTH))
    lines.append('END')
    return '\n'.join(lines) + '\n'

def loads_table(content: str) -> TranslationTable:
    """
    parse a table from the line-based file format

    :param content: file content
    :return:        parsed translation table
    """
    lines = content.split('\n')
    if lines and lines[-1] == '':
        lines.pop()
    if not lines:
        raise FormatError(1, 'empty file')
    match = HEADER.match(lines[0])
    if match is None:
        raise FormatError(1, f'bad header {lines[0][:60]!r}')
    if not match.group(2):
        raise RoleMissing('table header has no ROLE field')
    try:
        role = Role(match.group(2))
    except ValueError:
        raise FormatError(1, f'unknown role {match.group(2)!r}') from None
    n_slots = int(match.group(1))
    if n_slots <= 0 or n_slots % BASE_SLOTS:
        raise FormatError(1, f'N must be a positive multiple of {BASE_SLOTS}: {n_slots}')
    try:
        end = lines.index('END')
    except ValueError:
        raise FormatError(len(lines) + 1, 'missing END line') from None
    if end != len(lines) - 1:
        raise FormatError(end + 2, 'content after END')
    chunks = []
    for lineno, line in enumerate(lines[1:end], 2):
        points = np.frombuffer(line.encode('utf-32-le'), dtype='<u4')
        codes  = np.where(points < DECODE.size, DECODE[np.minimum(points, DECODE.size - 1)], -2)
        bad    = np.flatnonzero(codes == -2)
        if bad.size:
            col = int(bad[0])
            raise FormatError(lineno, f'invalid character at column {col + 1}')
        chunks.append(codes)
    data = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int8)
    if data.size != n_slots:
        raise LengthMismatch(n_slots, int(data.size), 'table data')
    for lineno, chunk in enumerate(chunks, 2):
        if chunk.size != LINE_WIDTH:
            raise FormatError(lineno, f'expected {LINE_WIDTH} characters, got {chunk.size}')
    return TranslationTable(n_slots, role, data)

def save_table(table: TranslationTable, path: PathLike):
    """
    write a table file

    :param table: table to write
    :param path:  destination path
    """
    Path(path).write_text(dumps_table(table), encoding='utf-8', newline='\n')
    logger.debug('saved %s table (N=%d) to %s', table.role.label, table.n_slots, path)

def load_table(path: PathLike) -> TranslationTable:
    """
    read a table file

    :param path: source path
    :return:     parsed translation table
    """
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return loads_table(f.read())
