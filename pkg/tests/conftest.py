import pytest

from compgen import scan


@pytest.fixture(scope="session")
def scan_dataset():
    return scan.enumerate_dataset()
