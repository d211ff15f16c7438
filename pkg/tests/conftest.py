"""Per-criterion PASS/FAIL summary for the acceptance suite.

Tests carry ``@pytest.mark.criterion(n)``; a criterion passes only when every
test tagged with it passed.
"""
from __future__ import annotations

from collections import defaultdict

import pytest

CRITERIA = {
    1: "scenario classifier on the four-scenario schedule",
    2: "network-cycle offset arithmetic",
    3: "feasibility bound",
    4: "simulator/classifier window agreement",
    5: "offset sweep replay",
    6: "network cycle sweep replay",
    7: "percentile and jitter pipeline",
    8: "conservation, determinism, FIFO",
    9: "probe trace round trip",
}

_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes[marker.args[0]].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            tr.write_line(f"criterion {n}: NOT RUN  {title}")
            continue
        failed = [name for name, o in results if o != "passed"]
        verdict = "FAIL" if failed else "PASS"
        extra = f"  (failing: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {n}: {verdict}  {title} [{len(results) - len(failed)}/{len(results)} tests]{extra}")
