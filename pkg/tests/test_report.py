"""Read-only report service."""
import pytest
from fastapi.testclient import TestClient

from qkdhorse.protocol.transcript import loads_transcript
from qkdhorse.report import Context, build_report, webapp

PREFIX = '/api/v1/report'


@pytest.fixture
def client():
    yield TestClient(webapp)
    Context.configure()


@pytest.fixture
def small(make_session):
    return make_session('trojan', rounds=20_000)


class TestRoutes:
    @pytest.mark.parametrize('route', ['summary', 'grid', 'audit', 'tables', 'attack'])
    def test_ok(self, client, small, base_pair, route):
        Context.configure(small, base_pair)
        response = client.get(f'{PREFIX}/{route}')
        assert response.status_code == 200
        assert response.json()

    def test_summary(self, client, small):
        Context.configure(small)
        body = client.get(f'{PREFIX}/summary').json()
        assert body['rounds'] == 20_000
        assert body['chsh']['violated'] is True

    def test_attack(self, client, small, base_pair):
        Context.configure(small, base_pair)
        body = client.get(f'{PREFIX}/attack').json()
        assert body['accuracy'] == 1.0
        assert body['reconstructed'] == len(small.key_a)

    def test_grid_labels(self, client, small):
        Context.configure(small)
        assert set(client.get(f'{PREFIX}/grid').json()) == {
            a + b for a in 'αβγδ' for b in 'αβγδ'}

    def test_nothing_loaded(self, client):
        response = client.get(f'{PREFIX}/summary')
        assert response.status_code == 404
        assert response.json()['detail'] == 'no transcript loaded'

    def test_attack_needs_tables(self, client, small):
        Context.configure(small)
        assert client.get(f'{PREFIX}/attack').status_code == 404
        assert client.get(f'{PREFIX}/tables').status_code == 404

    def test_audit_insufficient(self, client):
        Context.configure(loads_transcript([]))
        response = client.get(f'{PREFIX}/audit')
        assert response.status_code == 400
        assert 'empty transcript' in response.json()['detail']

    def test_read_only(self, client, small):
        Context.configure(small)
        assert client.post(f'{PREFIX}/summary').status_code == 405


class TestBuildReport:
    def test_without_tables(self, small):
        document = build_report(small)
        assert document['tables'] is None
        assert document['attack'] is None
        assert document['audit']['table_match'] is None

    def test_failed_section(self):
        document = build_report(loads_transcript([]))
        assert 'error' in document['audit']
