"""Acceptance criteria 1-13 at their stated tolerances.

Runs full mode (3 sigma, full path counts, runtime budgets) by default; set
``BMCX_ACCEPTANCE=quick`` for the reduced 4 sigma run. One pass/fail line per
criterion is printed and repeated in the terminal summary.
"""
import os

import pytest

from bmcx.acceptance import CRITERIA, run_criterion

QUICK = os.environ.get("BMCX_ACCEPTANCE", "full").lower() == "quick"
LINES = {}


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number):
    crit = run_criterion(number, quick=QUICK)
    LINES[number] = crit.line()
    print(crit.line())
    assert crit.passed, crit.line()
