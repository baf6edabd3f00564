"""Shared fixtures: one-time kernel warm-up and the acceptance report.

The warm-up forces JIT compilation before any timed assertion runs, so
compile cost never lands inside a runtime budget. Acceptance tests log one
line per criterion; the terminal-summary hook prints the collected lines
after the run so the outcome of each criterion is visible even when pytest
captures stdout.
"""

from __future__ import annotations

import pytest

from streammtl import kernels

CRITERION_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    kernels.warm_up()


@pytest.fixture(scope="session")
def criterion_log():
    def log(line: str) -> None:
        CRITERION_LINES.append(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)
