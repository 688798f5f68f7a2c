import pytest

from entire_julia.construction import Params, build_schedule, cardioid_c, smallest_valid_R

import helpers


@pytest.fixture(scope="session")
def sched_c0():
    """c = 0, N = 10, R = 2, K_max = 6."""
    return build_schedule(Params(0.0, 10, 2.0, 6))


@pytest.fixture(scope="session")
def sched_half():
    """mu = 0.5, N = 10 at the smallest valid R, K_max = 6."""
    R = smallest_valid_R(cardioid_c(0.5), 10)
    return build_schedule(Params(0.5, 10, R, 6))


@pytest.fixture(scope="session")
def sched_small():
    """Exploratory mu = 0.5, N = 3, R = 2, K_max = 4."""
    return build_schedule(Params(0.5, 3, 2.0, 4, conformant=False))


def pytest_terminal_summary(terminalreporter):
    if not helpers.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(helpers.ACCEPTANCE):
        ok, detail = helpers.ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
