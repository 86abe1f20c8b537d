"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

import pytest

_OUTCOMES: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _OUTCOMES.setdefault(number, {"title": title, "status": "PASS", "details": []})
    if report.failed:
        entry["status"] = "FAIL"
        entry["details"].append(report.longreprtext.strip().splitlines()[-1][:200])
    elif report.skipped:
        if entry["status"] == "PASS":
            entry["status"] = "SKIP"
        if isinstance(report.longrepr, tuple):
            entry["details"].append(str(report.longrepr[-1]))
    elif report.when == "call":
        entry["details"].extend(v for k, v in item.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        e = _OUTCOMES[number]
        line = f"criterion {number}: {e['status']}  {e['title']}"
        if e["details"]:
            line += "  [" + "; ".join(e["details"]) + "]"
        terminalreporter.write_line(line)
