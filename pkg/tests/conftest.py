import re

_CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    failed = report.failed or (report.when == "call" and report.skipped)
    if failed:
        _CRITERIA[key] = "FAIL"
    elif report.when == "call":
        _CRITERIA.setdefault(key, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {num:2d} {name.replace('_', ' '):32s} {status}")
