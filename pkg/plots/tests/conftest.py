import os
import sys

SRC = os.path.join(os.path.dirname(__file__), "..", "src")
if os.path.abspath(SRC) not in (os.path.abspath(p) for p in sys.path):
    sys.path.insert(0, os.path.abspath(SRC))

# the primary package, when running from a monorepo checkout
PRIMARY_SRC = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..", "src"))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    failed = [
        r.nodeid
        for r in terminalreporter.stats.get("failed", [])
        if "test_acceptance" in getattr(r, "nodeid", "")
    ]
    if ACCEPTANCE_LINES or failed:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
        for nodeid in failed:
            terminalreporter.write_line(f"FAIL {nodeid}")
