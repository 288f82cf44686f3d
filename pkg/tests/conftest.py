"""
Shared Fixtures: the 8000-slot table pair and a few seeded sessions
"""
import pytest

from qkdhorse.channel import ChannelConfig
from qkdhorse.protocol import SessionConfig, run_session
from qkdhorse.tables import derive_targets, generate_tables, save_table

#** Variables **#

#: rounds of the shared statistical sessions
ROUNDS = 200_000

#** Fixtures **#

@pytest.fixture(scope='session')
def base_pair():
    return generate_tables(derive_targets(8000), seed=1)

@pytest.fixture(scope='session')
def table_files(tmp_path_factory, base_pair):
    root = tmp_path_factory.mktemp('tables')
    path_a, path_b = root / 'a.tbl', root / 'b.tbl'
    save_table(base_pair.alice, path_a)
    save_table(base_pair.bob, path_b)
    return str(path_a), str(path_b)

def session(pair, backend: str, seed: int = 7, rounds: int = ROUNDS, **kwargs):
    channel = ChannelConfig(
        backend=backend,
        n_slots=8000,
        slot_policy=kwargs.pop('slot_policy', 'uniform'),
        eta=kwargs.pop('eta', 1.0),
        noise_q=kwargs.pop('noise_q', 0.0),
    )
    tables = pair if backend != 'honest' else None
    kwargs.setdefault('activate_at', 0 if backend != 'honest' else None)
    return run_session(SessionConfig.from_seed(seed, channel, tables=tables, rounds=rounds, **kwargs))

@pytest.fixture(scope='session')
def trojan_transcript(base_pair):
    return session(base_pair, 'trojan')

@pytest.fixture(scope='session')
def masked_transcript(base_pair):
    return session(base_pair, 'trojan-masked', rounds=50_000)

@pytest.fixture(scope='session')
def honest_transcript(base_pair):
    return session(base_pair, 'honest')

@pytest.fixture(scope='session')
def make_session(base_pair):
    """seeded session factory over the shared tables"""
    def factory(backend: str, **kwargs):
        return session(base_pair, backend, **kwargs)
    return factory
