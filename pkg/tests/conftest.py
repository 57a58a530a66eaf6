import pytest

from fataudit import synth
from fataudit.tabular import Dataset, save_csv


@pytest.fixture(scope="session")
def census():
    """Full synthetic census fixture; the qualitative audit testbed."""
    return synth.make_census(12000, seed=7)


@pytest.fixture(scope="session")
def census_first_10k(census):
    return Dataset(census.schema, census.rows[:10000], census.labels[:10000])


@pytest.fixture(scope="session")
def census_small():
    return synth.make_census(2000, seed=7)


@pytest.fixture(scope="session")
def census_small_csv(tmp_path_factory, census_small):
    path = tmp_path_factory.mktemp("data") / "census_small.csv"
    save_csv(census_small, path)
    return str(path)
