import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hypermarkov import measures as M

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def riesz_log():
    """Riesz product on n_k = 4^k with a_k = 1/log(k+2)."""
    return M.measure_from_spec({
        "kind": "riesz",
        "frequencies": {"rule": "geometric", "ratio": 4},
        "coefficients": {"rule": "inv_log", "shift": 2},
    })


@pytest.fixture(scope="session")
def convex_log():
    return M.ConvexAC(M.ConvexSeq(M.SequenceRule("inv_log", shift=2)))


@pytest.fixture(scope="session")
def convex_half():
    return M.ConvexAC(M.ConvexSeq(M.SequenceRule("power", shift=1, exponent=-0.5)))


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance lines after the run."""
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[k])
