"""
Receiver Role: Sans-IO State Machine plus its Stream Loop
"""
import asyncio
import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from . import RoleConfig
from .link import Link
from .wire import Ack, Announce, Done, Hello, Pulse, Sync, WireMessage, decode
from ..channel import PulseEvent, resolve_arm
from ..device import InitiationPulse, ReceiverState, choose_setting, handle_initiation
from ..protocol import SessionTranscript
from ..protocol.transcript import export_transcript
from ..tables import TranslationTable
from ..utils import NO_DETECT, PRIVATE, DeviceMode, Role
from ..utils.errors import ConnectionLost, ProtocolViolation

#** Variables **#
__all__ = ['ReceiverMachine', 'run_receiver', 'replay_receiver']

logger = logging.getLogger(__name__)

#** Classes **#

class ReceiverMachine:
    """
    one receiver's protocol state; consumes messages, returns replies

    pulses and relayed peer announcements must each arrive in seq order,
    and an announcement never precedes its own pulse
    """

    def __init__(self, config: RoleConfig, table: TranslationTable):
        self.config = config
        self.state  = ReceiverState(
            role=config.receiver,
            table=table,
            rng_seed=config.receiver_seed(),
            channel=config.channel_config(),
            session_id=config.session,
        )
        self.synced = False
        self.done   = False
        self.slots:    List[int] = []
        self.settings: List[int] = []
        self.codes:    List[int] = []
        self.peer_settings: List[int] = []
        self.peer_detected: List[bool] = []

    @property
    def role(self) -> Role:
        return self.state.role

    @property
    def mode(self) -> DeviceMode:
        return self.state.mode

    def receive(self, msg: WireMessage) -> List[WireMessage]:
        """
        advance the machine by one inbound message

        :param msg: decoded message from the source
        :return:    messages to send back
        """
        if self.done:
            raise ProtocolViolation('end of stream', type(msg).__name__, 'message')
        if isinstance(msg, Sync):
            return self._sync(msg)
        if not self.synced:
            raise ProtocolViolation('sync', type(msg).__name__, 'message')
        if isinstance(msg, Pulse):
            return self._pulse(msg)
        if isinstance(msg, Announce):
            return self._announce(msg)
        if isinstance(msg, Done):
            return self._done(msg)
        raise ProtocolViolation('pulse, ann or done', type(msg).__name__, 'message')

    def _sync(self, msg: Sync) -> List[WireMessage]:
        if msg.n_slots != self.state.table.n_slots:
            raise ProtocolViolation(self.state.table.n_slots, msg.n_slots, 'n_slots')
        pulse = InitiationPulse(msg.kind, msg.session)
        self.state  = handle_initiation(self.state, pulse, len(self.codes))
        self.synced = True
        return []

    def _pulse(self, msg: Pulse) -> List[WireMessage]:
        if msg.q != len(self.codes):
            raise ProtocolViolation(len(self.codes), msg.q, 'pulse seq')
        setting = choose_setting(self.state, msg.q)
        code    = NO_DETECT
        # without polarization optics a QKD-mode device never fires
        if self.state.mode is DeviceMode.TROJAN:
            pulse = PulseEvent(msg.q, msg.slot, msg.pol)
            code  = resolve_arm(self.state.channel, self.state.table, pulse, setting).code
        self.slots.append(msg.slot)
        self.settings.append(setting.index)
        self.codes.append(code)
        return [Announce(q=msg.q, det=code != NO_DETECT, set=setting.index)]

    def _announce(self, msg: Announce) -> List[WireMessage]:
        expected = len(self.peer_detected)
        if msg.q != expected:
            raise ProtocolViolation(expected, msg.q, 'announcement seq')
        if msg.q >= len(self.codes):
            raise ProtocolViolation(f'pulse {msg.q} first', 'announcement', 'message')
        self.peer_settings.append(msg.set)
        self.peer_detected.append(msg.det)
        return []

    def _done(self, msg: Done) -> List[WireMessage]:
        if msg.count != len(self.codes) or msg.count != len(self.peer_detected):
            raise ProtocolViolation(len(self.peer_detected), msg.count, 'done count')
        self.done = True
        logger.info('%s done after %d rounds in %s mode', self.role.label, msg.count, self.mode.value)
        return [Ack(role=self.config.role, count=msg.count, mode=self.mode.value)]

    def transcript(self) -> SessionTranscript:
        """
        transcript of every round whose peer announcement arrived

        the peer's detected outcomes are private and written as ``?``
        """
        rounds = len(self.peer_detected)
        own    = np.array(self.codes[:rounds], dtype=np.int8)
        peer   = np.where(np.array(self.peer_detected, dtype=bool), PRIVATE, NO_DETECT)
        own_settings  = np.array(self.settings[:rounds], dtype=np.int8)
        peer_settings = np.array(self.peer_settings, dtype=np.int8)
        alice = self.role is Role.ALICE
        return SessionTranscript(
            seqs=np.arange(rounds, dtype=np.int64),
            slots=np.array(self.slots[:rounds], dtype=np.int64),
            settings_a=own_settings if alice else peer_settings,
            settings_b=peer_settings if alice else own_settings,
            outcomes_a=own if alice else peer,
            outcomes_b=peer if alice else own,
            n_slots=self.state.table.n_slots,
        )

#** Functions **#

async def run_receiver(config: RoleConfig) -> SessionTranscript:
    """
    run a receiver role until Done, writing its transcript

    :param config: alice/bob role configuration
    :return:       the receiver's transcript (also written to ``config.out``)
    """
    config.check()
    machine = ReceiverMachine(config, config.load_table())
    host, port = config.endpoint()
    try:
        reader, writer = await asyncio.open_connection(host, port)
    except OSError as e:
        raise ConnectionLost('source', None, str(e)) from None
    record = open(config.record, 'wb') if config.record else None
    link   = Link(reader, writer, 'source', record)
    try:
        await link.send(Hello(role=config.role))
        while not machine.done:
            msg = await link.receive(config.timeout)
            if msg is None:
                raise ConnectionLost('source', link.lines, 'closed before done')
            for reply in machine.receive(msg):
                link.write(reply)
            if isinstance(msg, (Pulse, Done)):
                await link.drain()
    finally:
        transcript = machine.transcript()
        if config.out:
            export_transcript(transcript, config.out)
        if record is not None:
            record.close()
        await link.close()
    return transcript

def replay_receiver(config: RoleConfig, recording: Union[str, Path]) -> SessionTranscript:
    """
    feed a recorded inbound byte stream through a fresh receiver machine

    :param config:    the role configuration used for the recording
    :param recording: file written through ``config.record``
    :return:          transcript rebuilt from the recording
    """
    machine = ReceiverMachine(config, config.load_table())
    with open(recording, 'rb') as f:
        for lineno, line in enumerate(f, 1):
            machine.receive(decode(line, lineno))
    return machine.transcript()
