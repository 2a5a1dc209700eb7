from __future__ import annotations

import re

import pytest

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def criterion_line():
    """Record the one-line pass/fail summary of an acceptance criterion."""

    def record(label: str, passed: bool, detail: str) -> str:
        line = f"{label}: {'PASS' if passed else 'FAIL'} {detail}".rstrip()
        ACCEPTANCE_LINES[label] = line
        print(line)
        return line

    return record


def _order(label: str):
    m = re.match(r"C(\d+)", label)
    return (int(m.group(1)) if m else 99, label)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for label in sorted(ACCEPTANCE_LINES, key=_order):
            terminalreporter.write_line(ACCEPTANCE_LINES[label])
