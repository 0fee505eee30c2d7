"""Shared pytest wiring.

The acceptance module records one line per criterion here; the summary hook
prints them after the run so the verdict survives output capture.
"""

criterion_lines: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not criterion_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in criterion_lines:
        terminalreporter.write_line(line)
