import pytest

_results: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion check")


def pytest_runtest_logreport(report):
    if report.when != "call" and not report.failed:
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if not crit:
        return
    num, title = crit
    ok = report.passed if report.when == "call" else False
    prev = _results.get(num, (title, True))[1]
    _results[num] = (title, prev and ok)


@pytest.fixture(autouse=True)
def _tag_criterion(request, record_property):
    mark = request.node.get_closest_marker("criterion")
    if mark is not None:
        record_property("criterion", tuple(mark.args))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        title, ok = _results[num]
        terminalreporter.write_line(f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}")
