import pytest

_DETAIL = {}
_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the current criterion."""
    lines = _DETAIL.setdefault(request.node.nodeid, [])
    return lines.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        number, title = mark.args
        prev = _RESULTS.get(number)
        ok = rep.passed and (prev is None or prev[1])
        notes = (prev[2] if prev else []) + _DETAIL.get(item.nodeid, [])
        _RESULTS[number] = (title, ok, notes)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, notes = _RESULTS[number]
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}"
        if notes:
            line += "  [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)
