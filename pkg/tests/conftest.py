import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anticonc.distributions import RandomVariableModel
from anticonc.errors import ToleranceNotReached

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rademacher():
    return RandomVariableModel.rademacher()


@pytest.fixture
def std_gaussian():
    return RandomVariableModel.gaussian(0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(autouse=True)
def _strict_warnings():
    # numpy floating-point warnings and unconverged quadrature are bugs unless a test asks for them
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        warnings.simplefilter("error", ToleranceNotReached)
        yield


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
