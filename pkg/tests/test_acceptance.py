"""Exit criteria, one test each, at the tolerances and runtime budgets of the acceptance list."""
import pytest

from rggldp.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(number):
    result = run_criterion(number)
    print(result.line())
    assert result.passed, result.line()
