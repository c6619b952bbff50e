import os

import pytest

from websift.psl import PublicSuffixList

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def fixtures_dir() -> str:
    return FIXTURES


@pytest.fixture(scope="session")
def psl_path() -> str:
    return os.path.join(FIXTURES, "psl_snapshot.dat")


@pytest.fixture(scope="session")
def psl(psl_path) -> PublicSuffixList:
    return PublicSuffixList.from_file(psl_path)
