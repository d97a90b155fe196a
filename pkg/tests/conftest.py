"""Shared pytest hooks: acceptance criteria summary block."""

acceptance_lines = []


def record_criterion(line: str):
    acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in acceptance_lines:
        terminalreporter.write_line(line)
