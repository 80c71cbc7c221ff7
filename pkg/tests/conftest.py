"""Shared fixtures and the acceptance report hook.

Acceptance tests register one line each through ``record_criterion``;
the lines are printed in the terminal summary so they stay visible
under pytest's output capture.
"""

import pytest

from ietskew import golden_iet, sample_cocycle
from ietskew.iet_core import RATIONAL

_CRITERIA: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[criterion {number:2d}] {status}  {detail}".rstrip()
    _CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[number])


# --- shared inputs ---------------------------------------------------------


@pytest.fixture(scope="session")
def golden80():
    """Shallow rational golden surrogate; exact and fast, tracks the
    quadratic point for ~79 induction steps."""
    return golden_iet(mode=RATIONAL, depth=80)


@pytest.fixture(scope="session")
def golden400():
    return golden_iet(mode=RATIONAL, depth=400)


@pytest.fixture(scope="session")
def golden1200():
    return golden_iet(mode=RATIONAL, depth=1200)


@pytest.fixture(scope="session")
def f7():
    """The seed-7 rational element of C_{2,1}; the fixture cocycle used
    throughout the return-certificate tests."""
    return sample_cocycle(2, 1, seed=7, mode=RATIONAL)
