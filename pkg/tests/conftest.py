"""Per-criterion PASS/FAIL summary for tests marked ``criterion(k)``."""

import pytest

_OUTCOMES: dict[int, list[tuple[str, bool, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        if not rep.passed and not detail:
            detail = str(rep.longrepr).strip().splitlines()[-1][:160]
        _OUTCOMES.setdefault(mark.args[0], []).append((item.name, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_OUTCOMES):
        runs = _OUTCOMES[k]
        ok = all(p for _, p, _ in runs)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}")
        for name, passed, detail in runs:
            terminalreporter.write_line(f"    {'ok  ' if passed else 'FAIL'} {name}: {detail}")
