import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from model import MlpSpec, init_state  # noqa: E402
from tensor import RngStream, Stream  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_net(widths, seed=0, activation="tanh", loss="cross_entropy", use_bias=True, batch_size=8):
    """Random model plus a matching random batch."""
    spec = MlpSpec(widths=widths, activation=activation, loss=loss, use_bias=use_bias)
    state = init_state(spec, RngStream(seed, Stream.INIT))
    rng = RngStream(seed, Stream.DATA)
    X = rng.normal((batch_size, widths[0]))
    if loss == "cross_entropy":
        Y = rng.integers(0, widths[-1], batch_size)
    else:
        Y = rng.normal((batch_size, widths[-1]))
    return state, (X, Y)


@pytest.fixture
def small_net():
    return make_net([2, 3, 2])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
