"""Shared pytest plumbing.

Acceptance tests record a one-line verdict per criterion; the collected
lines are replayed in the terminal summary so a full run ends with a
compact pass/fail table regardless of capture settings.
"""

import pytest

_criterion_lines = []


@pytest.fixture(scope="session")
def criterion_log():
    """Append-only sink for acceptance verdict lines."""

    def record(line: str) -> None:
        _criterion_lines.append(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _criterion_lines:
        terminalreporter.write_line(line)
