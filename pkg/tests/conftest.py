import pytest

_verdicts: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" or rep.skipped:
        return
    number, title = mark.args
    ok = rep.passed and _verdicts.get(number, ("PASS",))[0] == "PASS"
    _verdicts[number] = ("PASS" if ok else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_verdicts):
        verdict, title = _verdicts[number]
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")
