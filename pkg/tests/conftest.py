import sys

import numpy as np
import pytest

from rkhorizon.generators import SyntheticSpec, build_synthetic


def low_rank(m, n, r, seed):
    g = np.random.default_rng(seed)
    return g.standard_normal((m, r)) @ g.standard_normal((r, n))


@pytest.fixture
def small_system():
    """40 x 15 rank 6 with an off-space residual of norm 3."""
    return build_synthetic(SyntheticSpec(40, 15, 6, beta=3.0, seed=11))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results):
            terminalreporter.write_line(results[key])
