import pytest

RESULTS = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, then assert on it."""
    def record(num, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {num}: {title} [{detail}]"
        RESULTS[num] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
