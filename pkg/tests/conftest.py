import pytest

_REPORT_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_REPORT_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Append ``(number, passed, detail)``; lines are printed in the terminal summary."""
    return request.config.stash[_REPORT_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(_REPORT_KEY, []))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in lines:
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
