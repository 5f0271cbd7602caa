import pytest

from platebench.chem import StaticTableProvider
from platebench import fixtures


@pytest.fixture(scope="session")
def provider():
    return StaticTableProvider()


@pytest.fixture(scope="session")
def ground_truths():
    return {exp: fixtures.load_ground_truth(exp) for exp in fixtures.EXPERIMENT_IDS}
