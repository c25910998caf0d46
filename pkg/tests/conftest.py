import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dtcausal import fixtures


@pytest.fixture(scope="session")
def chain_id():
    return fixtures.chain_xy()


@pytest.fixture(scope="session")
def reversed_id():
    return fixtures.reversed_xy()


@pytest.fixture(scope="session")
def confounded_id():
    return fixtures.confounded_treatment()


@pytest.fixture(scope="session")
def reduction_id():
    return fixtures.covariate_reduction()


@pytest.fixture(scope="session")
def iv_id():
    return fixtures.instrument_diagram()


@pytest.fixture(scope="session")
def two_stage_id():
    return fixtures.two_stage_diagram()
