import pytest

ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.fspath.basename != ACCEPTANCE_FILE or rep.when != "call":
        return
    label = getattr(item.function, "criterion", item.name)
    status = "PASS" if rep.passed else "FAIL"
    item.config._acceptance_lines.append(f"[{status}] {label} ({rep.duration:.1f} s)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
