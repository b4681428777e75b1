import numpy as np
import pytest

from fknn_cmlm.curves import CovariateType, Dataset


def make_dataset(values, labels, grid=None, n_classes=None, name="x"):
    values = np.asarray(values, dtype=float)
    if grid is None:
        grid = np.arange(values.shape[1], dtype=float)
    return Dataset((CovariateType(name, np.asarray(grid, dtype=float), values),),
                   np.asarray(labels), n_classes)


def assert_probabilities(probs, atol=1e-10):
    probs = np.asarray(probs)
    assert np.all(probs >= 0) and np.all(probs <= 1)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=atol)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One line per acceptance criterion, filled by test_acceptance.py and printed
# at the end of the run.
ACCEPTANCE_LINES = []


def record_acceptance(criterion, status, detail):
    line = f"criterion {criterion}: {status}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
