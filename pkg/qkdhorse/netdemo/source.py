"""
Pulse Source and Classical Broadcast Hub
"""
import asyncio
import logging
from typing import Dict, Optional

import numpy as np

from . import RoleConfig
from .link import Link
from .wire import Ack, Announce, Done, Hello, Pulse, Sync
from ..channel import ChannelConfig, emit_batch
from ..utils.errors import ConnectionLost, ProtocolViolation

#** Variables **#
__all__ = ['SourceHub', 'serve_source']

logger = logging.getLogger(__name__)

#: pulses written between flow-control drains
DRAIN_EVERY = 256

RECEIVERS = ('alice', 'bob')

#** Classes **#

class SourceHub:
    """
    accepts the peers, emits the pulses and relays the announcements

    :param config:  source role configuration
    :param channel: channel the pulses are drawn from
    """

    def __init__(self, config: RoleConfig, channel: ChannelConfig):
        self.config  = config
        self.channel = channel
        self.peers:   Dict[str, Link] = {}
        self.acks:    Dict[str, Ack] = {}
        self.joined   = asyncio.Event()
        self.pending: Dict[str, Dict[int, Announce]] = {role: {} for role in RECEIVERS}
        self.relayed  = 0

    @property
    def required(self):
        return RECEIVERS + (('eve', ) if self.config.wait_eve else ())

    async def accept(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        """register a connecting peer by its Hello line"""
        link = Link(reader, writer)
        try:
            hello = await link.receive(self.config.timeout)
        except ConnectionLost as e:
            logger.warning('rejected peer: %s', e)
            await link.close()
            return
        if not isinstance(hello, Hello) or hello.role == 'source' or hello.role in self.peers \
                or self.joined.is_set():
            logger.warning('rejected peer with greeting %r', hello)
            await link.close()
            return
        link.peer = hello.role
        self.peers[hello.role] = link
        logger.info('%s connected', hello.role)
        if all(role in self.peers for role in self.required):
            self.joined.set()

    def broadcast(self, msg):
        for link in self.peers.values():
            link.write(msg)

    async def drain(self):
        await asyncio.gather(*(link.drain() for link in self.peers.values()))

    def relay(self):
        """forward completed rounds in seq order, alice's announcement first"""
        alice, bob = self.pending['alice'], self.pending['bob']
        eve = self.peers.get('eve')
        while self.relayed in alice and self.relayed in bob:
            a, b = alice.pop(self.relayed), bob.pop(self.relayed)
            self.peers['bob'].write(a)
            self.peers['alice'].write(b)
            if eve is not None:
                eve.write(a)
                eve.write(b)
            self.relayed += 1

    async def collect(self, role: str):
        """read one receiver's announcements for every round"""
        link = self.peers[role]
        for expected in range(self.config.rounds):
            msg = await link.receive(self.config.timeout)
            if msg is None:
                raise ConnectionLost(role, link.lines, 'closed before all announcements')
            if not isinstance(msg, Announce):
                raise ProtocolViolation('ann', type(msg).__name__, 'message')
            if msg.q != expected:
                raise ProtocolViolation(expected, msg.q, f'{role} announcement seq')
            self.pending[role][msg.q] = msg
            self.relay()
            if expected % DRAIN_EVERY == DRAIN_EVERY - 1:
                await self.drain()

    async def emit(self):
        """write every pulse to every peer"""
        pulses = emit_batch(self.channel, np.arange(self.config.rounds, dtype=np.int64))
        slots, pols = pulses.slots.tolist(), pulses.polbits.tolist()
        for q in range(self.config.rounds):
            self.broadcast(Pulse(q=q, slot=slots[q], pol=pols[q]))
            if q % DRAIN_EVERY == DRAIN_EVERY - 1:
                await self.drain()
        await self.drain()

    async def run(self) -> int:
        """
        drive one session over the connected peers

        :return: exit status
        """
        cfg = self.config
        self.broadcast(Sync(session=cfg.session, n_slots=self.channel.n_slots, kind=cfg.sync))
        await self.drain()
        logger.info('sync %r sent to %s', cfg.sync, ', '.join(self.peers))
        await asyncio.gather(self.emit(), *(self.collect(role) for role in RECEIVERS))
        self.broadcast(Done(count=cfg.rounds))
        await self.drain()
        for role in RECEIVERS:
            ack = await self.peers[role].receive(cfg.timeout)
            if not isinstance(ack, Ack):
                raise ProtocolViolation('ack', type(ack).__name__, 'message')
            if ack.count != cfg.rounds:
                raise ProtocolViolation(cfg.rounds, ack.count, f'{role} ack count')
            self.acks[role] = ack
            logger.info('%s acknowledged %d rounds in %s mode', role, ack.count, ack.mode)
        return 0

    async def close(self):
        await asyncio.gather(*(link.close() for link in self.peers.values()))

#** Functions **#

async def serve_source(config: RoleConfig, ready: Optional[asyncio.Future] = None) -> int:
    """
    run the source role until the session completes

    :param config: source role configuration
    :param ready:  future receiving the bound (host, port) once listening
    :return:       exit status
    """
    config.check()
    hub = SourceHub(config, config.channel_config())
    host, port = config.endpoint()
    server = await asyncio.start_server(hub.accept, host, port)
    try:
        address = server.sockets[0].getsockname()[:2]
        logger.info('source listening on %s:%d', *address)
        if ready is not None:
            ready.set_result(address)
        try:
            await asyncio.wait_for(hub.joined.wait(), config.timeout)
        except asyncio.TimeoutError:
            missing = [r for r in hub.required if r not in hub.peers]
            raise ConnectionLost(missing[0], None, 'never connected') from None
        return await hub.run()
    finally:
        server.close()
        await hub.close()
        await server.wait_closed()
