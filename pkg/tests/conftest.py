"""Prints the acceptance-criterion verdict lines after the test run.

Output capture would otherwise swallow them; the terminal summary is
the one place pytest always lets plugins write to the real terminal.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in acceptance.RESULTS:
        terminalreporter.write_line(line)
