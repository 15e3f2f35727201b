import numpy as np
import pytest

# Covariance matrix of the six-variable screening example.
EXAMPLE_S = np.array([
    [1.0000, 0.2058, 0.1794, 0.7340, 0.7298, 0.7167],
    [0.2058, 1.0000, 0.3212, 0.2643, 0.3158, 0.2848],
    [0.1794, 0.3212, 1.0000, 0.1895, 0.2105, 0.2327],
    [0.7340, 0.2643, 0.1895, 1.0000, 0.9606, 0.9089],
    [0.7298, 0.3158, 0.2105, 0.9606, 1.0000, 0.9378],
    [0.7167, 0.2848, 0.2327, 0.9089, 0.9378, 1.0000],
])
EXAMPLE_LAMBDAS = (0.9607, 0.7438, 0.3452, 0.2070)

# Six-dimensional R-vine matrix whose density has the fifteen terms
# c21, c62, c36, c52, c45, c61|2, ..., c41|2356.
EXAMPLE_M = np.array([
    [4, 0, 0, 0, 0, 0],
    [1, 5, 0, 0, 0, 0],
    [3, 1, 3, 0, 0, 0],
    [6, 3, 1, 6, 0, 0],
    [2, 6, 2, 1, 2, 0],
    [5, 2, 6, 2, 1, 1],
])

# Completed matrix of the merge-and-fill example.
MERGED_M = np.array([
    [3, 0, 0, 0, 0, 0],
    [6, 2, 0, 0, 0, 0],
    [4, 6, 5, 0, 0, 0],
    [1, 4, 6, 1, 0, 0],
    [5, 1, 4, 6, 4, 0],
    [2, 5, 1, 4, 6, 6],
])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request, capsys):
    """Record ``(ok, detail)`` for the named criterion and print its line."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_RESULTS.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
