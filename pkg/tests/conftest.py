import re

import pytest

_CRITERIA: dict = {}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if not match:
        return
    key = (int(match.group(1)), match.group(2))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[key] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), outcome in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num:2d} {name}: {outcome}")


@pytest.fixture(scope="session")
def mesh_l1():
    from platemix.harness import canonical_mesh

    return canonical_mesh(1)


@pytest.fixture(scope="session")
def mesh_l2():
    from platemix.harness import canonical_mesh

    return canonical_mesh(2)
