import json
import math
import os
from datetime import datetime, timezone

import pytest

DATA = os.path.join(os.path.dirname(__file__), "data")
BRACKETS = os.path.join(DATA, "brackets.json")
BASELINES = os.path.join(DATA, "baselines.json")
LOG_TOL = 0.05

ACCEPTANCE = {}


def _load(path):
    if not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def frozen_bracket(name, lo, hi, log_tol=LOG_TOL):
    """Pin an empirical ``[lo, hi]`` bracket on first sight; afterwards require
    ``log lo >= log lo0 - tol`` and ``log hi <= log hi0 + tol``.

    Returns the stored entry.
    """
    assert 0 < lo <= hi < math.inf, (name, lo, hi)
    data = _load(BRACKETS)
    entry = data.get(name)
    if entry is None:
        entry = {"min": lo, "max": hi,
                 "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        data[name] = entry
        os.makedirs(DATA, exist_ok=True)
        with open(BRACKETS, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return entry
    assert math.log(lo) >= math.log(entry["min"]) - log_tol, (name, lo, entry)
    assert math.log(hi) <= math.log(entry["max"]) + log_tol, (name, hi, entry)
    return entry


@pytest.fixture
def bracket():
    return frozen_bracket


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = (passed, detail)
    print(f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"CRITERION {number}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running oracle and Monte Carlo checks")
