import os
import sys

# unit tests import the reference implementations in oracles.py directly
sys.path.insert(0, os.path.dirname(__file__))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = {}
    for status, word in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py::" not in rep.nodeid:
                continue
            if getattr(rep, "when", "call") != "call" and word == "PASS":
                continue
            name = rep.nodeid.split("::")[-1]
            name = name.removeprefix("test_")
            if word == "FAIL" or name not in lines:
                lines[name] = word
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"ACCEPTANCE {name}: {lines[name]}")
