"""
Framed Message Link over an asyncio Byte Stream
"""
import asyncio
import logging
from typing import BinaryIO, Optional

from .wire import WireMessage, decode, encode
from ..utils.errors import ConnectionLost, FormatError

#** Variables **#
__all__ = ['Link']

logger = logging.getLogger(__name__)

#** Classes **#

class Link:
    """
    one peer connection: whole-line writes, strict line reads

    :param reader: stream reader of the connection
    :param writer: stream writer of the connection
    :param peer:   name of the remote role (used in errors)
    :param record: optional binary file receiving every inbound line
    """

    def __init__(self,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
        peer:   str = 'peer',
        record: Optional[BinaryIO] = None,
    ):
        self.reader = reader
        self.writer = writer
        self.peer   = peer
        self.record = record
        self.lines  = 0
        self.lock   = asyncio.Lock()

    def write(self, msg: WireMessage):
        self.writer.write(encode(msg))

    async def drain(self):
        # concurrent drains on one writer are not allowed
        async with self.lock:
            try:
                await self.writer.drain()
            except ConnectionError as e:
                raise ConnectionLost(self.peer, self.lines, str(e) or 'reset') from None

    async def send(self, msg: WireMessage):
        self.write(msg)
        await self.drain()

    async def receive(self, timeout: Optional[float] = None) -> Optional[WireMessage]:
        """
        read the next message

        :param timeout: seconds to wait for a line
        :return:        decoded message, or None on a clean end of stream
        """
        try:
            line = await asyncio.wait_for(self.reader.readline(), timeout)
        except asyncio.TimeoutError:
            raise ConnectionLost(self.peer, self.lines + 1, 'timed out') from None
        except (ConnectionError, asyncio.LimitOverrunError, ValueError) as e:
            raise ConnectionLost(self.peer, self.lines + 1, str(e) or 'reset') from None
        if not line:
            return None
        self.lines += 1
        if self.record is not None:
            self.record.write(line)
        if not line.endswith(b'\n'):
            raise ConnectionLost(self.peer, self.lines, 'truncated line')
        try:
            return decode(line, self.lines)
        except FormatError as e:
            raise ConnectionLost(self.peer, e.line, e.reason) from None

    async def close(self):
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except ConnectionError:
            pass
        logger.debug('link to %s closed after %d lines', self.peer, self.lines)
