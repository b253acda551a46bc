import pytest

from b92srp.params import ChannelParams, ProtocolParams

KAPPA = 10**-0.92

# (criterion, description, passed, detail), filled by test_acceptance
ACCEPTANCE_LINES: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def channel():
    return ChannelParams()


@pytest.fixture
def desk_params():
    return ProtocolParams(mu=1e5, kappa=KAPPA)


@pytest.fixture
def default_params():
    return ProtocolParams(mu=10**6.59, kappa=KAPPA)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {desc}: {detail}")
