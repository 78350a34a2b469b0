import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # the acceptance module files one PASS/FAIL line per criterion; show
    # them as a block once the run is over, sorted by criterion number
    mod = sys.modules.get(f"{__package__}.test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split(".")[0].split()[-1]):
            terminalreporter.line(line)
