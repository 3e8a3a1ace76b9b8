import time

import numpy as np
import pytest

SUITE_BUDGET_S = 120.0

_results: list[tuple[str, bool, str]] = []
_start = [0.0]


def pytest_sessionstart(session):
    _start[0] = time.perf_counter()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(name, passed, detail)``."""
    def record(name: str, passed: bool, detail: str = "") -> bool:
        _results.append((name, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _results:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
    elapsed = time.perf_counter() - _start[0]
    ok = elapsed < SUITE_BUDGET_S
    terminalreporter.write_line(
        f"{'PASS' if ok else 'FAIL'}  [10b] full suite runtime  {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _start[0]
    # runtime budget only applies to a complete run of the suite
    if _results and elapsed >= SUITE_BUDGET_S and session.exitstatus == 0:
        session.exitstatus = 1
