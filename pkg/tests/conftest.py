import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line, echoed in the terminal summary."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
