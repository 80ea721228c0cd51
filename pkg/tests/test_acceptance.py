"""Acceptance criteria A1-A9; one PASS/FAIL line per check is printed."""

import pytest

from eprsim.verify import ALL_CRITERIA


@pytest.mark.parametrize("criterion", list(ALL_CRITERIA))
def test_criterion(criterion, capsys):
    checks = ALL_CRITERIA[criterion]()
    with capsys.disabled():
        print()
        for c in checks:
            print(c.line())
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, "\n".join(failed)
