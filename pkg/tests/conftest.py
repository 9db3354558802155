import math

import pytest
from hypothesis import strategies as st

from erasure_aoi import UNBOUNDED, ErasureChannel, Policy

caps_st = st.one_of(st.integers(min_value=1, max_value=8), st.just(UNBOUNDED))
policies = st.lists(caps_st, min_size=1, max_size=6).map(lambda cs: Policy(tuple(cs)))
channels = st.floats(min_value=0.0, max_value=0.9, allow_nan=False).map(ErasureChannel)


def close(a, b, tol=1e-12):
    """|a - b| <= tol * max(1, |b|): absolute near unit scale, relative above it."""
    return abs(a - b) <= tol * max(1.0, abs(b))


# ---- acceptance criteria summary -------------------------------------------

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    num, title = mark.args
    entry = _criteria.setdefault(num, {"title": title, "passed": 0, "failed": []})
    if rep.passed and rep.when == "call":
        entry["passed"] += 1
    elif rep.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        status = "FAIL" if e["failed"] else "PASS"
        line = f"criterion {num} [{e['title']}]: {status} ({e['passed']} checks passed"
        if e["failed"]:
            line += f"; failed: {', '.join(e['failed'])}"
        tr.write_line(line + ")")
