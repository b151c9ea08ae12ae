import helpers


def pytest_terminal_summary(terminalreporter):
    if not helpers.CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in helpers.CRITERIA:
        terminalreporter.write_line(line)
