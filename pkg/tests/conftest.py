"""Shared pytest plumbing for the test suite."""

import re
import sys


def _criterion_key(line):
    m = re.match(r"ACCEPTANCE (\d+)(\S*)", line)
    return (int(m.group(1)), m.group(2)) if m else (99, line)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criteria lines outside of output capture."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None) if mod else None
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=_criterion_key):
        terminalreporter.write_line(line)
