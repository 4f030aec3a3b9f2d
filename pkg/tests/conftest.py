"""Shared fixtures and the per-criterion acceptance summary."""

import re

import pytest

from oracles import suite_instances, suite_specs

_CRITERIA = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


@pytest.fixture(scope="session")
def suite():
    """The seeded 500-instance suite as ``(specs, instances)``."""
    return suite_specs(500), suite_instances(500)


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2).replace("_", " "))
    if report.when == "call" or report.failed or report.skipped:
        prev = _CRITERIA.get(key, "PASS")
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _CRITERIA[key] = outcome if prev == "PASS" else prev


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, label), outcome in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num}: {outcome}  {label}")
