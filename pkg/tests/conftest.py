import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.fixture
def measured(request):
    """Dict whose contents are printed next to the criterion's pass/fail line."""
    values = {}
    request.node.user_properties.append(("measured", values))
    return values


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.outcome != "passed"):
        return
    number, title = mark.args
    passed = rep.passed and not hasattr(rep, "wasxfail")
    values = {}
    for key, val in item.user_properties:
        if key == "measured":
            values.update(val)
    entry = _CRITERIA.setdefault(number, {"title": title, "parts": []})
    entry["parts"].append((item.name, passed, values))


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = all(p for _, p, _ in entry["parts"])
        tr.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {entry['title']}")
        for name, passed, values in entry["parts"]:
            detail = ", ".join(f"{k}={_fmt(v)}" for k, v in values.items())
            tr.write_line(f"      {'ok  ' if passed else 'FAIL'} {name}  {detail}")
