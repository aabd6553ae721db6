"""Shared fixtures: acceptance-criterion reporting."""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def criterion_report():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def _report(num: int, description: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        line = f"[criterion {num:02d}] {status}: {description}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
