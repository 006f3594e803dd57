"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test prints one PASS/FAIL line (also under output capture) and then
asserts the criterion.  Run directly with ``python tests/test_acceptance.py``
for the summary lines only.
"""
import sys

import pytest

from gpsemi.validation import CRITERIA


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + result.line())
    failed = [name for name, ok in result.checks.items() if not ok]
    assert result.passed, f"criterion {number} failed checks {failed}; metrics {result.metrics}"


if __name__ == "__main__":
    results = [CRITERIA[k]() for k in sorted(CRITERIA)]
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
