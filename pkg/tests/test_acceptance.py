"""Acceptance criteria 1-13, one printed pass/fail line each.

Criterion 7 only runs when G48/G49/G50 are present under ``$LOWRANKCUT_GSET_DIR``
(default ``data/gset``); otherwise it reports SKIP.
"""

import os
import subprocess
import sys
import time

import pytest

from lowrankcut.verify import CRITERIA, FULL_BUDGET_S, QUICK_BUDGET_S, CriterionResult, run_criterion

GSET_DIR = os.environ.get("LOWRANKCUT_GSET_DIR", "data/gset")
_elapsed: dict[int, float] = {}


def _report(capsys, res: CriterionResult):
    with capsys.disabled():
        print("\n" + res.line())


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"c{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, capsys):
    res = run_criterion(number, GSET_DIR)
    _elapsed[number] = res.seconds
    _report(capsys, res)
    if res.skipped:
        pytest.skip(res.detail)
    assert res.passed, res.line()


def test_c13_runtime(capsys):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "lowrankcut", "verify", "--quick"],
                          capture_output=True, text=True, timeout=10 * QUICK_BUDGET_S)
    quick = time.perf_counter() - t0
    missing = [c[0] for c in CRITERIA if c[0] not in _elapsed]
    for num in missing:
        _elapsed[num] = run_criterion(num, GSET_DIR).seconds
    full = sum(_elapsed.values())
    ok = proc.returncode == 0 and quick <= QUICK_BUDGET_S and full <= FULL_BUDGET_S
    res = CriterionResult(13, "verify runtime", ok,
                          f"quick verify {quick:.1f}s (budget {QUICK_BUDGET_S:.0f}s, exit {proc.returncode}), "
                          f"full criteria {full:.1f}s (budget {FULL_BUDGET_S:.0f}s)", seconds=quick + full)
    _report(capsys, res)
    assert ok, proc.stdout + proc.stderr
