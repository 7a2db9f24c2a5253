import numpy as np
import pytest

from coopisac.channel import Geometry, RadioParams, generate_channels
from coopisac.metrics import PrimalState


@pytest.fixture(scope="session")
def default_channels():
    return generate_channels(Geometry.default(), RadioParams(), 0)


@pytest.fixture(scope="session")
def tiny_channels():
    g = Geometry.default()
    geom = Geometry(g.bs_position, g.cue_positions[:2], g.due_positions[:2])
    return generate_channels(geom, RadioParams(grid=(2, 2)), 3)


def random_state(rng, N, K, M, block_p=False):
    """A random relaxed state with every variable in its box."""
    st = PrimalState.zeros(N, K, M)
    st.W = (rng.standard_normal((N, K + 1)) + 1j * rng.standard_normal((N, K + 1))) * 0.3
    st.F = (rng.standard_normal((K, N, M)) + 1j * rng.standard_normal((K, N, M))) * 0.3
    c = rng.uniform(0, 1, (K, 1, M))
    st.c = np.repeat(c, N, axis=1)
    if block_p:
        st.p = np.repeat(rng.uniform(0, 1, (K, 1, M)), N, axis=1)
    else:
        st.p = rng.uniform(0, 1, (K, N, M))
    return st


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
