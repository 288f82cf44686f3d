"""Networked demo: receiver machine, link framing and a localhost session."""
import asyncio
import json
import logging

import numpy as np
import pytest

from qkdhorse.eve import score_attack
from qkdhorse.netdemo import (
    Link, ReceiverMachine, RoleConfig, replay_receiver, run_eve, run_receiver, serve_source)
from qkdhorse.netdemo.wire import Ack, Announce, Done, Pulse, Sync
from qkdhorse.protocol.transcript import merge_transcripts
from qkdhorse.utils import PRIVATE, DeviceMode
from qkdhorse.utils.errors import ConnectionLost, MissingTables, ProtocolViolation, WrongBackend

ROUNDS = 2000

COLUMNS = ('seqs', 'slots', 'settings_a', 'settings_b', 'outcomes_a', 'outcomes_b')


def alice_config(**kwargs) -> RoleConfig:
    kwargs.setdefault('table', 'a.tbl')
    return RoleConfig(role='alice', connect='127.0.0.1:9', seed=7, **kwargs)


class TestRoleConfig:
    def test_receiver_needs_table(self):
        with pytest.raises(MissingTables):
            alice_config(table=None).check()

    def test_eve_needs_both_tables(self):
        with pytest.raises(MissingTables):
            RoleConfig(role='eve', connect='127.0.0.1:9', table_a='a.tbl').check()

    def test_honest_backend(self):
        with pytest.raises(WrongBackend):
            RoleConfig(role='source', listen='127.0.0.1:0', backend='honest').check()

    def test_tap_needs_mask(self):
        config = RoleConfig(role='eve', connect='127.0.0.1:9',
            table_a='a.tbl', table_b='b.tbl', tap=True)
        with pytest.raises(WrongBackend):
            config.check()

    def test_endpoint(self):
        with pytest.raises(ValueError):
            RoleConfig(role='source', listen='nowhere').check()
        with pytest.raises(ValueError):
            RoleConfig(role='bob', table='b.tbl').check()
        assert RoleConfig(role='source', listen='localhost:4100').endpoint() == ('localhost', 4100)

    def test_seeds(self):
        assert alice_config().receiver_seed() != RoleConfig(role='bob', seed=7).receiver_seed()


class TestReceiverMachine:
    @pytest.fixture
    def machine(self, base_pair):
        return ReceiverMachine(alice_config(), base_pair.alice)

    def test_pulse_before_sync(self, machine):
        with pytest.raises(ProtocolViolation):
            machine.receive(Pulse(q=0, slot=3))

    def test_normal_sync_never_detects(self, machine):
        machine.receive(Sync(session=0, n_slots=8000, kind='normal'))
        assert machine.mode is DeviceMode.QKD
        for q in range(50):
            reply, = machine.receive(Pulse(q=q, slot=q * 37 % 8000))
            assert reply.q == q and not reply.det

    def test_activation(self, machine):
        machine.receive(Sync(session=0, n_slots=8000, kind='activate'))
        assert machine.mode is DeviceMode.TROJAN
        replies = [machine.receive(Pulse(q=q, slot=q * 101 % 8000))[0] for q in range(200)]
        assert any(r.det for r in replies)

    def test_slot_count_mismatch(self, machine):
        with pytest.raises(ProtocolViolation):
            machine.receive(Sync(session=0, n_slots=16000))

    def test_pulse_order(self, machine):
        machine.receive(Sync(session=0, n_slots=8000))
        with pytest.raises(ProtocolViolation):
            machine.receive(Pulse(q=1, slot=0))

    def test_announcement_before_pulse(self, machine):
        machine.receive(Sync(session=0, n_slots=8000))
        with pytest.raises(ProtocolViolation):
            machine.receive(Announce(q=0, det=True, set=1))

    def test_done(self, machine):
        machine.receive(Sync(session=0, n_slots=8000, kind='activate'))
        machine.receive(Pulse(q=0, slot=10))
        with pytest.raises(ProtocolViolation):
            machine.receive(Done(count=1))
        machine.receive(Announce(q=0, det=False, set=2))
        ack, = machine.receive(Done(count=1))
        assert ack == Ack(role='alice', count=1, mode='trojan')
        with pytest.raises(ProtocolViolation):
            machine.receive(Pulse(q=1, slot=0))

    def test_unexpected_message(self, machine):
        machine.receive(Sync(session=0, n_slots=8000))
        with pytest.raises(ProtocolViolation):
            machine.receive(Ack(role='bob', count=0, mode='qkd'))

    def test_transcript_hides_peer(self, machine):
        machine.receive(Sync(session=0, n_slots=8000, kind='activate'))
        machine.receive(Pulse(q=0, slot=10))
        machine.receive(Pulse(q=1, slot=20))
        machine.receive(Announce(q=0, det=True, set=3))
        transcript = machine.transcript()
        assert len(transcript) == 1
        assert transcript.settings_b.tolist() == [3]
        assert transcript.outcomes_b.tolist() == [PRIVATE]


class TestLink:
    @staticmethod
    def read_all(data: bytes):
        async def run():
            reader = asyncio.StreamReader()
            reader.feed_data(data)
            reader.feed_eof()
            link = Link(reader, None, 'source')
            messages = []
            while (msg := await link.receive(1.0)) is not None:
                messages.append(msg)
            return messages
        return asyncio.run(run())

    def test_lines(self):
        data = b'{"t":"sync","session":0,"n_slots":8000,"kind":"normal"}\n{"t":"done","count":0}\n'
        assert self.read_all(data) == [Sync(session=0, n_slots=8000), Done(count=0)]

    def test_truncated(self):
        with pytest.raises(ConnectionLost) as err:
            self.read_all(b'{"t":"done","count":0}\n{"t":"done"')
        assert err.value.line == 2
        assert err.value.reason == 'truncated line'

    def test_malformed(self):
        with pytest.raises(ConnectionLost) as err:
            self.read_all(b'{"t":"done","count":"0"}\n')
        assert err.value.line == 1
        assert err.value.role == 'source'


@pytest.mark.slow
class TestLocalhostSession:
    @pytest.fixture(scope='class')
    def run(self, tmp_path_factory, table_files):
        root   = tmp_path_factory.mktemp('demo')
        path_a, path_b = table_files
        common = dict(seed=7, rounds=ROUNDS, backend='trojan', timeout=60.0)
        configs = {}

        async def demo():
            ready  = asyncio.get_running_loop().create_future()
            source = RoleConfig(role='source', listen='127.0.0.1:0', wait_eve=True, **common)
            server = asyncio.create_task(serve_source(source, ready))
            host, port = await ready
            endpoint = f'{host}:{port}'
            configs['alice'] = RoleConfig(role='alice', connect=endpoint, table=path_a,
                record=str(root / 'alice.rec'), out=str(root / 'alice.ndjson'), **common)
            configs['bob'] = RoleConfig(role='bob', connect=endpoint, table=path_b, **common)
            configs['eve'] = RoleConfig(role='eve', connect=endpoint,
                table_a=path_a, table_b=path_b, out=str(root / 'eve.json'), **common)
            return await asyncio.gather(server,
                run_receiver(configs['alice']), run_receiver(configs['bob']), run_eve(configs['eve']))

        status, alice, bob, eve = asyncio.run(demo())
        return status, alice, bob, eve, configs, root

    def test_matches_in_process(self, run, make_session):
        status, alice, bob, _, _, _ = run
        assert status == 0
        merged   = merge_transcripts(alice, bob)
        expected = make_session('trojan', rounds=ROUNDS)
        for name in COLUMNS:
            assert np.array_equal(getattr(merged, name), getattr(expected, name)), name
        assert merged.key_a == expected.key_a

    def test_eve_breaks_the_key(self, run):
        _, alice, bob, eve, _, root = run
        report = score_attack(eve, merge_transcripts(alice, bob).key_a)
        assert report.accuracy_vs_alice == 1.0
        assert report.coverage == 1.0
        written = json.loads((root / 'eve.json').read_text())
        assert 'accuracy' not in written
        assert len(written['bits']) == len(eve.reconstructed_bits)

    def test_replay(self, run):
        _, alice, _, _, configs, root = run
        replayed = replay_receiver(configs['alice'], root / 'alice.rec')
        for name in COLUMNS:
            assert np.array_equal(getattr(replayed, name), getattr(alice, name)), name
        assert (root / 'alice.ndjson').exists()

    def test_acknowledged(self, caplog, table_files, tmp_path):
        caplog.set_level(logging.INFO, logger='qkdhorse')
        path_a, path_b = table_files
        common = dict(seed=3, rounds=500, backend='trojan-masked', timeout=60.0)

        async def demo():
            ready  = asyncio.get_running_loop().create_future()
            server = asyncio.create_task(serve_source(
                RoleConfig(role='source', listen='127.0.0.1:0', **common), ready))
            host, port = await ready
            endpoint = f'{host}:{port}'
            return await asyncio.gather(server,
                run_receiver(RoleConfig(role='alice', connect=endpoint, table=path_a, **common)),
                run_receiver(RoleConfig(role='bob', connect=endpoint, table=path_b, **common)))

        status, _, _ = asyncio.run(demo())
        assert status == 0
        assert 'alice acknowledged 500 rounds in trojan mode' in caplog.text
        assert 'bob acknowledged 500 rounds in trojan mode' in caplog.text
