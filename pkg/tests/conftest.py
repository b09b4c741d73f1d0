import sys


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance criteria lines, one per criterion, in order."""
    for name, module in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance" and hasattr(module, "RESULTS"):
            if module.RESULTS:
                terminalreporter.section("acceptance criteria")
                for number in sorted(module.RESULTS):
                    terminalreporter.write_line(module.RESULTS[number])
