import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

# criterion number -> (passed, detail), filled in by the acceptance tests
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {num}: {detail}")
