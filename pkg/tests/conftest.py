import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record():
    """Record and echo a one-line acceptance result; fails the test on FAIL."""

    def _record(number: int, ok: bool, summary: str):
        line = f"acceptance {number}: {'PASS' if ok else 'FAIL'} | {summary}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
