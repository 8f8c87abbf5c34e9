from __future__ import annotations

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criteria verdict lines past output capture."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
