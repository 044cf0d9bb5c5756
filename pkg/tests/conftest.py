"""Shared fixtures; collects acceptance-criterion verdicts for the run summary."""

import pytest

_verdicts: list[str] = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one pass/fail line per acceptance criterion.

    The line prints immediately (visible under -s) and again in the
    terminal summary block, so a plain ``pytest -v`` run still ends with
    the full checklist.
    """

    def record(line: str) -> None:
        _verdicts.append(line)
        print(line, flush=True)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in _verdicts:
        terminalreporter.write_line(line)
