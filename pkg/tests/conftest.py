import pytest


def pytest_configure(config):
    config._acceptance = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion; echoed again in the terminal summary."""
    log = request.config._acceptance

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        log.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
