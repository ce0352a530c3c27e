"""Acceptance bookkeeping: tests marked ``criterion(n, label)`` are folded
into one PASS/FAIL line per criterion at the end of the session."""

from collections import OrderedDict

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_criteria = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion this test belongs to")


def _entry(item):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return None
    number, label = mark.args
    return _criteria.setdefault(number, {"label": label, "passed": 0, "failed": 0, "details": []})


def pytest_collection_modifyitems(items):
    for item in items:
        _entry(item)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    entry = _entry(item)
    if entry is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry["passed" if rep.passed else "failed"] += 1
        for key, value in item.user_properties:
            if key == "detail":
                entry["details"].append(str(value))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria, key=str):
        e = _criteria[number]
        ran = e["passed"] + e["failed"]
        if ran == 0:
            status = "NOT RUN"
        else:
            status = "PASS" if e["failed"] == 0 else "FAIL"
        line = f"criterion {number} {status}: {e['label']} ({e['passed']}/{ran} checks)"
        if e["details"]:
            line += " | " + "; ".join(e["details"])
        tr.write_line(line)
