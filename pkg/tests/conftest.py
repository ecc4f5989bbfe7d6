import numpy as np
import pytest
from hypothesis import strategies as st

from bdistill.bellcore import BellDiagonalDist

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def random_dist(rng: np.random.Generator, zero_prob: float = 0.2) -> BellDiagonalDist:
    """Dirichlet draw with occasional exact zeros, normalized to sum 1."""
    raw = rng.dirichlet(np.ones(4))
    raw[rng.random(4) < zero_prob] = 0.0
    if raw.sum() == 0:
        raw[rng.integers(4)] = 1.0
    return BellDiagonalDist.from_values(raw, renormalize=True)


@st.composite
def dists(draw):
    weights = draw(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda w: sum(w) > 1e-6))
    return BellDiagonalDist.from_values(weights, renormalize=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
