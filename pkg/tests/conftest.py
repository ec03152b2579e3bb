import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from elastodg import cubic_law, linear_law

# derandomized so repeated runs see the same examples
settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def cubic():
    return cubic_law()


@pytest.fixture
def linear():
    return linear_law()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[crit]
        status = "PASS" if all(ok for ok, _ in clauses) else "FAIL"
        terminalreporter.write_line(f"{status} criterion {crit}")
        for ok, text in clauses:
            terminalreporter.write_line(f"    [{'ok' if ok else 'FAIL'}] {text}")
