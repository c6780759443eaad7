import time

import pytest

from weldlab import _kernels

RUNTIME_BUDGET = 300.0

_acceptance_lines = []


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # pay the compile cost once, up front
    _kernels.warmup()


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for acceptance-criterion outcomes, one line each,
    printed together at session end (even for red criteria)."""

    def record(criterion: int, summary: str, ok: bool) -> bool:
        _acceptance_lines.append(
            (criterion,
             f"ACCEPTANCE criterion {criterion}: {summary}: "
             f"{'PASS' if ok else 'FAIL'}"))
        return ok

    return record


def pytest_configure(config):
    config._suite_t0 = time.time()


def pytest_sessionfinish(session, exitstatus):
    t0 = getattr(session.config, "_suite_t0", None)
    if t0 is None:
        return
    for _, line in sorted(_acceptance_lines):
        print("\n" + line, end="")
    elapsed = time.time() - t0
    ok = elapsed < RUNTIME_BUDGET
    print("\nACCEPTANCE criterion 8: suite runtime %.1f s (budget %.0f s): %s"
          % (elapsed, RUNTIME_BUDGET, "PASS" if ok else "FAIL"))
    if not ok and session.exitstatus == 0:
        session.exitstatus = 1
