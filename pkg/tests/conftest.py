import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, title = mark.args
    failed = rep.failed
    if rep.when == "call" or failed or rep.skipped:
        status = "FAIL" if failed else ("SKIP" if rep.skipped else "PASS")
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        prev = _CRITERIA.get(num)
        if prev is not None:
            # parametrized criteria: any failure wins, details accumulate
            status = prev[1] if prev[1] != "PASS" else status
            detail = "; ".join(d for d in (prev[2], detail) if d)
        _CRITERIA[num] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[num]
        line = f"[{status}] criterion {num:2d}: {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
