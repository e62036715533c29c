from collections import defaultdict

import pytest

_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if hasattr(rep, "wasxfail"):
            state = "xfail" if rep.skipped else "xpass"
        else:
            state = rep.outcome
        _outcomes[mark.args[0]].append((item.name, state))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        parts = _outcomes[n]
        ok = all(state == "passed" for _, state in parts)
        detail = ", ".join(f"{name}={state}" for name, state in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  ({detail})")
