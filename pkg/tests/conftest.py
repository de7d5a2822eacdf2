def pytest_terminal_summary(terminalreporter):
    from test_acceptance import ROWS

    if not ROWS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ROWS):
        terminalreporter.write_line(ROWS[number].line())
