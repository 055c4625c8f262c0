import pytest

# criterion number -> list of (test id, outcome, detail)
_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        detail = getattr(item, "criterion_detail", "")
        _CRITERIA.setdefault(mark.args[0], []).append((item.name, rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        rows = _CRITERIA[n]
        ok = all(o == "passed" for _, o, _ in rows)
        details = "; ".join(d for _, _, d in rows if d)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {details}")


@pytest.fixture
def report(request):
    """Attach a one-line measurement to the current criterion test."""

    def _set(text: str):
        request.node.criterion_detail = text

    return _set
