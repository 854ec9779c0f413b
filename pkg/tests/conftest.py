"""Shared pytest hooks: collect one summary line per acceptance criterion."""

ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, text: str) -> str:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
