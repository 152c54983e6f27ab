import pytest

from chainlab.search import load_known_values, packaged_table_path


@pytest.fixture(scope="session")
def known_values():
    return load_known_values(packaged_table_path())


@pytest.fixture(scope="session")
def table_path():
    return packaged_table_path()
