import numpy as np
import pytest

from vrspam.dataio import Dataset, compute_stats


@pytest.fixture
def toy():
    """{(2, +1), (-2, -1)}, the hand-checkable example used throughout."""
    return Dataset.from_dense(np.array([[2.0], [-2.0]]), np.array([1, -1]))


def random_dataset(rng, n=None, d=None, density=0.7):
    n = n or int(rng.integers(4, 60))
    d = d or int(rng.integers(1, 12))
    X = rng.standard_normal((n, d)) * (rng.random((n, d)) < density)
    y = np.where(rng.random(n) < 0.4, 1, -1)
    y[0], y[1] = 1, -1
    return Dataset.from_dense(X, y)


def random_problem(rng, **kw):
    data = random_dataset(rng, **kw)
    return data, compute_stats(data)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
