import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from stablecluster.metric import Instance, build_from_points


def plane_instance(rng, n, scale=10.0):
    return build_from_points(rng.uniform(0, scale, size=(n, 2)), name="plane")


def integer_metric(rng, n, high=6):
    """Shortest-path closure of random integer weights: a metric with many ties."""
    W = rng.integers(1, high, size=(n, n)).astype(float)
    W = np.triu(W, 1)
    W = W + W.T
    D = shortest_path(W, directed=False)
    return Instance(name="intmetric", dist=D)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
