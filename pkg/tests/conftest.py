import pytest

from _tablecache import cached_table


@pytest.fixture(scope="session")
def desk_table():
    """The shared desk-scale reference table (1e5 rows, dt 0.5, 1500 obs).

    Built once and cached under .cache/; the first build takes a few
    minutes, later sessions load it from disk.
    """
    return cached_table(workers=2)
