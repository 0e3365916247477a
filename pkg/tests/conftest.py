import numpy as np
import pytest

from dipolar_gpe import DipoleAxis, make_grid

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid1():
    return make_grid(1, 6.0, 16, 6.0, 16)


@pytest.fixture(scope="session")
def grid2():
    return make_grid(2, 6.0, 16, 6.0, 16)


@pytest.fixture(scope="session")
def tilted_axis():
    return DipoleAxis.from_vector([np.sin(0.3), 0.0, np.cos(0.3)], 1)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
