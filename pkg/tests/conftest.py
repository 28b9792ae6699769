import numpy as np
import pytest

import traceverify as tv

DATA = __file__.rsplit("/", 1)[0] + "/data"
DEMO_SIM = __file__.rsplit("/", 2)[0] + "/demo/relay.sim"

# Trace multiset behind the worked learning example: 88 + 2 + 2 + 8 abstract
# shapes over a single predicate bit.
RUNNING_SHAPES = [
    (("0", "0", "0", "0"), 88),
    (("0", "0", "0", "1"), 2),
    (("0", "0", "1"), 2),
    (("0", "0", "1", "1"), 8),
]


def running_example_traces():
    out = []
    for shape, count in RUNNING_SHAPES:
        out.extend([shape] * count)
    return out


def two_state_chain():
    """The learned 2-state model: 0 self-loops with 0.998, leaks 0.002 to an
    absorbing target tagged '1'."""
    return tv.Dtmc(
        ("0", "1"),
        np.array([1.0, 0.0]),
        [{0: 0.998, 1: 0.002}, {1: 1.0}],
        steps={(0, "0"): 0, (0, "1"): 1, (1, "1"): 1},
    )


@pytest.fixture
def running_traces():
    return running_example_traces()


@pytest.fixture
def running_file():
    return f"{DATA}/running_example.traces"


@pytest.fixture
def chain():
    return two_state_chain()


@pytest.fixture
def relay_sim_path():
    return DEMO_SIM
