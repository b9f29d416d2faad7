"""Shared fixtures and the acceptance summary printed after each run."""

import re

import pytest

from toyset import make_toy_dataset

_ACCEPT = re.compile(r"::test_(p\d+|s1)_")


def pytest_terminal_summary(terminalreporter):
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _ACCEPT.search(rep.nodeid)
            if m:
                key = m.group(1).upper()
                status = "PASS" if outcome == "passed" else "FAIL"
                if lines.get(key) != "FAIL":
                    lines[key] = status
    if not lines:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance summary:")
    for key in sorted(lines, key=lambda k: (len(k), k)):
        terminalreporter.write_line(f"  {key}: {lines[key]}")


@pytest.fixture
def toy_dataset():
    return make_toy_dataset()
