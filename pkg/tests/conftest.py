import pytest

import histopart.partitioner as partitioner

# Every gamma-bound check made anywhere in the suite is tallied here; a single
# violation fails the session even if no test looked at the run that caused it.
GAMMA_TALLY = {"checks": 0, "violations": 0}
ACCEPTANCE_LINES = []

_check_gamma_bound = partitioner.check_gamma_bound


def _counting_check(gamma, state, epsilon):
    ok = _check_gamma_bound(gamma, state, epsilon)
    GAMMA_TALLY["checks"] += 1
    if not ok:
        GAMMA_TALLY["violations"] += 1
    return ok


partitioner.check_gamma_bound = _counting_check


@pytest.fixture
def gamma_tally():
    return GAMMA_TALLY


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_sessionfinish(session, exitstatus):
    if GAMMA_TALLY["violations"] and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(
        f"gamma-bound checks across suite: {GAMMA_TALLY['checks']} rounds, "
        f"{GAMMA_TALLY['violations']} violations")
