import re

import pytest

CRITERIA = {
    1: "scalar counterexample triad",
    2: "matched-disturbance / transmission-zero triad",
    3: "rescaled pair solves every term (500 instances)",
    4: "observer coupling boundary",
    5: "matched-disturbance tests agree (500 models)",
    6: "Stirling / Bell counts",
    7: "three-segment tracking, 3 followers",
    8: "100 followers, four gauge transformations",
    9: "rescaling beats re-solving (M = 1000)",
    10: "strategy two success implies strategy one",
}
_outcomes: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion")
    config.addinivalue_line("markers", "slow: long-running simulation")


def pytest_runtest_logreport(report):
    m = re.search(r"test_ac(\d+)_", report.nodeid)
    if not m:
        return
    k = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        if report.outcome == "failed" and report.when == "call":
            detail = (detail + " " if detail else "") + "(assertion failed)"
        prev = _outcomes.get(k)
        if prev is None or prev[0] == "PASS":
            _outcomes[k] = ("PASS" if report.outcome == "passed" else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        status, detail = _outcomes.get(k, ("NOT RUN", ""))
        line = f"AC{k:02d} {status:7s} {CRITERIA[k]}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
