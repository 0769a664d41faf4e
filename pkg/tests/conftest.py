import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lrroc.data_model import TwoSampleData

settings.register_profile(
    "lrroc", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("lrroc")


def random_data(rng: np.random.Generator, n0: int, n1: int, shift: float = 1.0,
                positive: bool = True) -> TwoSampleData:
    """Normal-ish samples, optionally pushed positive, rounded to create ties."""
    x = rng.normal(0.0, 1.0, n0)
    y = rng.normal(shift, rng.uniform(0.6, 1.6), n1)
    if positive:
        x, y = np.exp(0.4 * x), np.exp(0.4 * y)
    return TwoSampleData(np.round(x, 2), np.round(y, 2))


@st.composite
def two_samples(draw, min_n=2, max_n=40, positive=True):
    n0 = draw(st.integers(min_n, max_n))
    n1 = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**31 - 1))
    shift = draw(st.floats(-1.0, 3.0))
    data = random_data(np.random.default_rng(seed), n0, n1, shift, positive)
    if np.unique(np.concatenate([data.healthy, data.diseased])).size < 2:
        data = TwoSampleData(np.append(data.healthy[:-1], 0.5), data.diseased)
    return data


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance lines collected by test_acceptance.record(); echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
