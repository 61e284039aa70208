import os

import pytest

from nckg.client import Gateway, GatewayConfig
from nckg.evaluation import load_gold
from nckg.lexical import build_index
from nckg.ontology import load_default_ontology
from nckg.turtle import load_store

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_file(name):
    return os.path.join(DATA_DIR, name)


def mock_gateway(script, max_in_flight=4):
    config = GatewayConfig(
        backend="mock", mock_script=script, max_in_flight=max_in_flight
    )
    return Gateway(config)


@pytest.fixture(scope="session")
def onto():
    return load_default_ontology()


@pytest.fixture
def seed_store():
    return load_store([data_file("seed.ttls")])


@pytest.fixture
def context_store():
    return load_store([data_file("retrieved_context.ttls")])


@pytest.fixture
def seed_index(seed_store, onto):
    return build_index(seed_store, onto)


@pytest.fixture
def review_gateway():
    return mock_gateway(data_file("review_script.json"))


@pytest.fixture
def extraction_gateway():
    return mock_gateway(data_file("extraction_script.json"))


@pytest.fixture
def gold():
    return load_gold(data_file("gold.jsonl"))


@pytest.fixture
def advance_payment_clause(gold):
    return gold[0].clause


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("NCKG_API_KEY", "sk-test")
    return "sk-test"


@pytest.fixture
def default_config(tmpdir):
    valid_config = """{
    "top_k": 2,
    "max_depth": 4,
    "gateway": {
        "endpoint": "http://localhost/v1",
        "model": "test-model",
        "timeout": 2,
        "max_retries": 2
    }
}
"""

    config_path = tmpdir.join("nckg.json")
    config_path.write(valid_config)
    return str(config_path)
