import pathlib

import pytest

DATA_DIR = pathlib.Path(__file__).parent / "data"
GOLDEN_DIR = pathlib.Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def corpus_root() -> pathlib.Path:
    return DATA_DIR / "corpus"


@pytest.fixture(scope="session")
def listings_root() -> pathlib.Path:
    return DATA_DIR / "listings"


@pytest.fixture(scope="session")
def fixture_1000_tokens() -> str:
    return (DATA_DIR / "fixture_1000_tokens.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def golden_e2e() -> pathlib.Path:
    return GOLDEN_DIR / "e2e"
