"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

from collections import OrderedDict

import pytest

_RESULTS: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion this test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        num, title = mark.args
        entry = _RESULTS.setdefault(num, {"title": title, "ok": True, "notes": []})
        entry["ok"] &= rep.passed
        notes = [str(v) for k, v in item.user_properties if k == "measured"]
        entry["notes"].append(f"{item.name}: {'ok' if rep.passed else 'FAILED'}"
                              + (f" ({'; '.join(notes)})" if notes else ""))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        entry = _RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if entry['ok'] else 'FAIL'}  {entry['title']}")
        for note in entry["notes"]:
            terminalreporter.write_line(f"    {note}")
