"""
Networked Demo: Source, Receivers and Eve as Communicating Processes

The source doubles as the classical broadcast hub: receivers send their
announcements to it and it relays them, Alice's before Bob's in seq
order, to the other receiver and to any Eve subscriber.
"""
import re
from typing import Annotated, Optional, Tuple

from pyderive.extensions.validate import BaseModel, Regex

from ..channel import Backend, ChannelConfig
from ..tables import TablePair, TranslationTable, derive_targets, load_table
from ..utils import Role, derive_seed
from ..utils.errors import MissingTables, WrongBackend

#** Variables **#
__all__ = [
    'RoleConfig',

    'Link',
    'serve_source',
    'ReceiverMachine',
    'run_receiver',
    'replay_receiver',
    'EveMachine',
    'run_eve',
]

#: role name validator
RoleName = Annotated[str, Regex(r'^(source|alice|bob|eve)$')]

#: host:port endpoint format
ENDPOINT = re.compile(r"^[\w.\-]+:\d+$")

#** Classes **#

class RoleConfig(BaseModel, compat=True):
    role:        RoleName
    listen:      Optional[str] = None
    connect:     Optional[str] = None
    table:       Optional[str] = None
    table_a:     Optional[str] = None
    table_b:     Optional[str] = None
    seed:        int = 0
    rounds:      int = 1000
    n_slots:     int = 8000
    backend:     str = 'trojan'
    slot_policy: str = 'uniform'
    eta:         float = 1.0
    noise_q:     float = 0.0
    sync:        str = 'activate'
    session:     int = 0
    wait_eve:    bool = False
    skip:        int = 0
    tap:         bool = False
    out:         Optional[str] = None
    record:      Optional[str] = None
    timeout:     float = 30.0

    @property
    def receiver(self) -> Optional[Role]:
        return {'alice': Role.ALICE, 'bob': Role.BOB}.get(self.role)

    def check(self):
        """
        validate the cross-field rules of the role

        :raises MissingTables: receiver or Eve started without tables
        :raises WrongBackend:  honest backend, or tapping an unmasked one
        """
        if self.role == 'source' and self.listen is None:
            raise ValueError('the source needs a listen endpoint')
        if self.role != 'source' and self.connect is None:
            raise ValueError(f'{self.role} needs a connect endpoint')
        endpoint = self.listen if self.role == 'source' else self.connect
        if not ENDPOINT.match(endpoint):
            raise ValueError(f'endpoint must be host:port: {endpoint!r}')
        if self.receiver is not None and self.table is None:
            raise MissingTables(f'{self.role} needs its translation table')
        if self.role == 'eve' and (self.table_a is None or self.table_b is None):
            raise MissingTables('eve needs both translation tables')
        channel = self.channel_config()
        if not channel.trojan:
            raise WrongBackend('the classical demo link only carries trojan backends')
        if self.tap and not channel.masked:
            raise WrongBackend(f'no polarization to tap on {channel.backend.value} backend')
        if self.sync not in ('normal', 'activate'):
            raise ValueError(f'invalid sync kind: {self.sync!r}')
        if self.rounds < 1 or self.skip < 0:
            raise ValueError('rounds must be positive and skip non-negative')

    def endpoint(self) -> Tuple[str, int]:
        """(host, port) to listen on (source) or connect to (peers)"""
        endpoint   = self.listen if self.role == 'source' else self.connect
        host, port = endpoint.rsplit(':', 1)
        return host, int(port)

    def channel_config(self) -> ChannelConfig:
        return ChannelConfig(
            backend=Backend(self.backend),
            n_slots=self.n_slots,
            slot_policy=self.slot_policy,
            eta=self.eta,
            noise_q=self.noise_q,
            seed=derive_seed(self.seed, 'channel'),
        )

    def receiver_seed(self) -> int:
        return derive_seed(self.seed, self.role)

    def load_table(self) -> TranslationTable:
        table = load_table(self.table)
        if table.role is not self.receiver:
            raise MissingTables(f'{self.table} holds the {table.role.label} table, not {self.role}')
        return table

    def load_tables(self) -> TablePair:
        alice, bob = load_table(self.table_a), load_table(self.table_b)
        return TablePair(alice, bob, derive_targets(alice.n_slots))

#** Init **#

from .link import Link
from .source import serve_source
from .receiver import ReceiverMachine, run_receiver, replay_receiver
from .eve import EveMachine, run_eve
