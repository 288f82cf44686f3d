"""
Eve Role: Passive Subscriber to the Pulse Stream and the Broadcast
"""
import asyncio
import logging
from typing import Dict, List, Optional

from . import RoleConfig
from .link import Link
from .wire import Announce, Done, Hello, Pulse, Sync, WireMessage
from ..channel import PulseEvent
from ..eve import AttackReport, EveKnowledge, reconstruct_key, tap_polarization
from ..protocol import ClassicalMessage
from ..tables import TablePair
from ..utils import Role, Setting
from ..utils.errors import ConnectionLost, ProtocolViolation

#** Variables **#
__all__ = ['EveMachine', 'run_eve']

logger = logging.getLogger(__name__)

#** Classes **#

class EveMachine:
    """
    Eve's incremental reconstruction: each round is predicted as soon as
    both of its announcements have been relayed
    """

    def __init__(self, config: RoleConfig, tables: TablePair):
        self.config  = config
        self.tables  = tables
        self.channel = config.channel_config()
        self.done    = False
        self.pulses  = 0
        self.timings: Dict[int, int] = {}
        self.taps:    Dict[int, int] = {}
        self.classical_log: List[ClassicalMessage] = []
        self.bits:    Dict[int, int] = {}
        self.key_rounds = 0
        self.pending: Optional[ClassicalMessage] = None

    def receive(self, msg: WireMessage):
        """
        advance the machine by one inbound message

        :param msg: decoded message relayed by the source
        """
        if self.done:
            raise ProtocolViolation('end of stream', type(msg).__name__, 'message')
        if isinstance(msg, Sync):
            logger.info('eve saw %r sync for session %d', msg.kind, msg.session)
        elif isinstance(msg, Pulse):
            self._pulse(msg)
        elif isinstance(msg, Announce):
            self._announce(msg)
        elif isinstance(msg, Done):
            self.done = True
        else:
            raise ProtocolViolation('sync, pulse, ann or done', type(msg).__name__, 'message')

    def _pulse(self, msg: Pulse):
        if msg.q != self.pulses:
            raise ProtocolViolation(self.pulses, msg.q, 'pulse seq')
        self.pulses += 1
        if msg.q < self.config.skip:
            return
        self.timings[msg.q] = msg.slot
        if self.config.tap:
            pulse = PulseEvent(msg.q, msg.slot, msg.pol)
            self.taps[msg.q] = tap_polarization(pulse, self.channel)

    def _announce(self, msg: Announce):
        rounds = len(self.classical_log) // 2
        sender = Role.ALICE if self.pending is None else Role.BOB
        if msg.q != rounds:
            raise ProtocolViolation(rounds, msg.q, f'{sender.label} announcement seq')
        message = ClassicalMessage(msg.q, sender, msg.det, Setting(msg.set))
        if sender is Role.ALICE:
            self.pending = message
            return
        alice, self.pending = self.pending, None
        self.classical_log.extend((alice, message))
        if not (alice.detected and message.detected and alice.setting == message.setting):
            return
        self.key_rounds += 1
        if msg.q not in self.timings:
            return
        knowledge = EveKnowledge(
            tables=self.tables,
            pulse_timings={msg.q: self.timings[msg.q]},
            pol_taps={msg.q: self.taps[msg.q]} if self.config.tap else None,
            classical_log=[alice, message],
        )
        self.bits.update(reconstruct_key(knowledge).reconstructed_bits)

    def report(self) -> AttackReport:
        """
        the reconstruction so far; coverage counts publicly sifted rounds

        :return: attack report (accuracy is graded later against alice's key)
        """
        coverage = len(self.bits) / self.key_rounds if self.key_rounds else None
        return AttackReport(dict(self.bits), coverage=coverage)

#** Functions **#

async def run_eve(config: RoleConfig) -> AttackReport:
    """
    subscribe to the source, reconstruct the key, write the report

    :param config: eve role configuration
    :return:       attack report (also written to ``config.out``)
    """
    config.check()
    machine = EveMachine(config, config.load_tables())
    host, port = config.endpoint()
    try:
        reader, writer = await asyncio.open_connection(host, port)
    except OSError as e:
        raise ConnectionLost('source', None, str(e)) from None
    link = Link(reader, writer, 'source')
    try:
        await link.send(Hello(role='eve'))
        while not machine.done:
            msg = await link.receive(config.timeout)
            if msg is None:
                raise ConnectionLost('source', link.lines, 'closed before done')
            machine.receive(msg)
    finally:
        report = machine.report()
        if config.out:
            with open(config.out, 'w', encoding='utf-8') as f:
                f.write(report.to_json() + '\n')
        await link.close()
    logger.info('eve reconstructed %d bits (coverage %s)', len(report.reconstructed_bits), report.coverage)
    return report
