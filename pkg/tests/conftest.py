"""Shared test wiring.

Acceptance tests append (number, name, passed) tuples to
ACCEPTANCE_RESULTS; the terminal summary prints one line per criterion so
the verdicts are visible even when pytest captures test output.
"""

ACCEPTANCE_RESULTS: list[tuple[int, str, bool]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'}")
