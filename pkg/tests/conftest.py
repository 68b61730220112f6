import numpy as np
import pytest

from central_spin_bench.model import (
    build_couplings,
    excited_state,
    initial_block_state,
    superposition_state,
)


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow", action="store_true", default=False, help="run the N=10 acceptance comparisons"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance comparison")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_profile():
    return build_couplings(4, alpha0=0.05)


@pytest.fixture
def excited_4(small_profile):
    return initial_block_state(excited_state(), "unpolarized", small_profile.n_bath)


@pytest.fixture
def superposition_4(small_profile):
    return initial_block_state(superposition_state(), "unpolarized", small_profile.n_bath)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
