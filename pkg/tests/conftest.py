import numpy as np
import pytest

from dddscore import SimConfig, TemplateBank, normalize

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def bank():
    return TemplateBank.build(SimConfig(raters=10_000, seed=0))


@pytest.fixture
def uniform10():
    return normalize([1] * 10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_histograms(rng, count, k=10, max_votes=500):
    """Random count histograms with varied sparsity."""
    out = []
    for _ in range(count):
        width = rng.integers(1, k + 1)
        start = rng.integers(0, k - width + 1)
        c = np.zeros(k, dtype=int)
        c[start:start + width] = rng.integers(0, max_votes, size=width)
        if c.sum() == 0:
            c[start] = 1
        out.append(normalize(c))
    return out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
