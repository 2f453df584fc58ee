import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.errors import NotConvergent
from core.schemas.report import ConvergenceVerdict, LadderReport
from service.bisection import bisect_threshold, coerce

CONVERGENT = ConvergenceVerdict.CONVERGENT
DIVERGENT = ConvergenceVerdict.DIVERGENT
INCONCLUSIVE = ConvergenceVerdict.INCONCLUSIVE


def stub_ladder(verdict: ConvergenceVerdict) -> LadderReport:
    return LadderReport(levels=[1], values=[0.0], increments=[], ratios=[], reliable=[True], verdict=verdict)


def threshold_oracle(threshold: float, grey: float = 0.0):
    """Convergent from threshold + grey on, Inconclusive in between"""

    def oracle(eps: float):
        if eps >= threshold + grey:
            verdict = CONVERGENT
        elif eps >= threshold:
            verdict = INCONCLUSIVE
        else:
            verdict = DIVERGENT
        return verdict, stub_ladder(verdict), None

    return oracle


def test_coerce():
    assert coerce(INCONCLUSIVE, "divergent") == DIVERGENT
    assert coerce(INCONCLUSIVE, "convergent") == CONVERGENT
    assert coerce(DIVERGENT, "convergent") == DIVERGENT


def test_brackets_threshold():
    lo, hi, steps = bisect_threshold(threshold_oracle(0.3), 1.0, 0.01)
    assert lo < 0.3 <= hi
    assert hi - lo <= 0.01
    assert steps[0].eps == 1.0


def test_expands_upper_end():
    lo, hi, steps = bisect_threshold(threshold_oracle(3.0), 1.0, 0.1)
    assert [p.eps for p in steps[:3]] == [1.0, 2.0, 4.0]
    assert lo < 3.0 <= hi


def test_gives_up_after_three_doublings():
    with pytest.raises(NotConvergent):
        bisect_threshold(threshold_oracle(100.0), 1.0, 0.1)


def test_inconclusive_policy_moves_the_bracket():
    oracle = threshold_oracle(0.3, grey=0.2)
    _, hi_div, steps = bisect_threshold(oracle, 1.0, 0.01, "divergent")
    _, hi_conv, _ = bisect_threshold(oracle, 1.0, 0.01, "convergent")
    assert hi_div >= 0.5
    assert hi_conv < 0.5
    grey = [p for p in steps if p.verdict == INCONCLUSIVE]
    assert grey and all(p.coerced == DIVERGENT for p in grey)


@given(st.floats(0.01, 0.99), st.floats(1e-4, 0.1))
def test_bracket_contains_threshold(threshold, width):
    lo, hi, _ = bisect_threshold(threshold_oracle(threshold), 1.0, width)
    assert lo < threshold <= hi
    assert hi - lo <= width
