from pathlib import Path

import pytest

from streamaug.llm import MockBackend
from streamaug.templates import load_templates

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture()
def mock_backend():
    return MockBackend()


@pytest.fixture(scope="session")
def fixture_50_users():
    """Bundled 50-user corpus covering all four sparsity categories."""
    return DATA_DIR / "fixture_50_users.jsonl"
