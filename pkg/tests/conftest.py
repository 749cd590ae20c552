import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "passed": True, "ran": False, "detail": ""})
    if rep.when == "call" or rep.failed:
        entry["ran"] = entry["ran"] or rep.when == "call"
        entry["passed"] = entry["passed"] and rep.passed
        if rep.failed and rep.when != "call":
            entry["detail"] = f"{rep.when} error"
    details = [v for k, v in item.user_properties if k == "detail"]
    if details:
        entry["detail"] = details[-1]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["passed"] and e["ran"] else "FAIL"
        tr.write_line(f"[{status}] criterion {n:2d}: {e['title']} | {e['detail']}")
