import sys
from pathlib import Path

# tests import the shared helpers module directly
sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    """One visible line per acceptance guarantee, after capture ends."""
    acceptance = sys.modules.get("tests.test_acceptance") \
        or sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance checklist")
    for label, ok in acceptance.RESULTS:
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] {label}")
