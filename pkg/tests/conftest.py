import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from inclsolve.zoo import get_problem

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# one line per acceptance criterion, filled by tests/test_acceptance.py
CRITERIA = {}


def record(number, title, ok, detail=""):
    CRITERIA[number] = (title, bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        title, ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}"
                                    + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def rotation():
    return get_problem("rotation2")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
