"""Shared fixtures and the acceptance-criterion reporter."""

from __future__ import annotations

import numpy as np
import pytest

from reldeleg.hamiltonian import hamiltonian

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by this test")
    config.addinivalue_line("markers", "slow: long-running statistical test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "seen": False, "failed": []})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["seen"] = True
        if not report.passed:
            entry["passed"] = False
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["passed"] and e["seen"] else "FAIL"
        extra = f"  (failing: {', '.join(e['failed'])})" if e["failed"] else ""
        terminalreporter.write_line(f"criterion {number:>2} {status}: {e['title']}{extra}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def h_z():
    return hamiltonian([(1.0, "Z")])


@pytest.fixture
def h_x():
    return hamiltonian([(1.0, "X")])


@pytest.fixture
def h_xz():
    return hamiltonian([(1.0, "X"), (1.0, "Z")])


def random_state(rng, n: int) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)
