from __future__ import annotations

import sys
from pathlib import Path

import pytest

from logprivacy import EventLog

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def example1_log() -> EventLog:
    return EventLog.from_counts(
        {
            ("a", "b", "c", "d"): 10,
            ("a", "c", "b", "d"): 20,
            ("a", "d", "b", "d"): 5,
            ("a", "b", "d", "d"): 15,
        }
    )


@pytest.fixture
def example2_l1() -> EventLog:
    return EventLog.from_traces(
        [
            ("a", "b", "c", "d"),
            ("a", "c", "b", "d"),
            ("a", "b", "c", "c", "d"),
            ("a", "b", "b", "c", "d"),
        ]
    )


@pytest.fixture
def example2_l2() -> EventLog:
    return EventLog.from_counts(
        {("a", "b", "c", "d"): 4, ("e", "f"): 4, ("g", "h"): 4}
    )


@pytest.fixture
def example3_original() -> EventLog:
    return EventLog.from_counts(
        {
            ("a", "b", "c", "d"): 1,
            ("a", "c", "b", "d"): 1,
            ("a", "e", "c", "d"): 49,
            ("a", "e", "b", "d"): 49,
        }
    )


@pytest.fixture
def example3_anonymized() -> EventLog:
    return EventLog.from_counts({("a", "b", "c", "d"): 50, ("a", "c", "b", "d"): 50})


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE[name] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE[name] = "SKIP"
    elif report.when == "setup" and report.failed:
        _ACCEPTANCE[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{name}: {_ACCEPTANCE[name]}")
