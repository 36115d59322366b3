import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from mrclust import Dataset


@pytest.fixture
def line4():
    """Points 0, 1, 10, 11 on a line, ids 0..3."""
    return Dataset.euclidean([[0.0], [1.0], [10.0], [11.0]])


def graph_metric(n, seed, density=0.3):
    """Shortest-path metric of a random connected weighted graph."""
    rng = np.random.default_rng(seed)
    w = np.where(rng.random((n, n)) < density, rng.uniform(1, 10, (n, n)), 0.0)
    w = np.triu(w, 1)
    ring = np.arange(n)
    w[ring[:-1], ring[1:]] = np.maximum(w[ring[:-1], ring[1:]], rng.uniform(1, 10, n - 1))
    return shortest_path(w + w.T, directed=False)


def random_instance(seed, n, dim=2):
    """Euclidean for even seeds, shortest-path metric for odd ones."""
    rng = np.random.default_rng(seed)
    if seed % 2 == 0:
        return Dataset.euclidean(rng.random((n, dim)))
    return Dataset.explicit(graph_metric(n, seed))


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    """Record one acceptance verdict; the lines are echoed at the end of the run."""
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
