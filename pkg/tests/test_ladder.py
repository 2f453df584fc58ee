import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.errors import InsufficientLevels
from core.schemas.report import ConvergenceVerdict
from quadrature.ladder import (
    ClassifierOptions,
    TruncationLadder,
    build_report,
    classify,
    ladder_integrate,
    linear_fit_r2,
    ratios_of,
)


def geometric(ratio: float, scale: float = 1.0, count: int = 10):
    return list(np.cumsum(scale * ratio ** np.arange(count)))


def test_classify_geometric_convergent():
    assert classify(geometric(0.5)) == ConvergenceVerdict.CONVERGENT


def test_classify_linear_divergent():
    assert classify([float(k) for k in range(10)]) == ConvergenceVerdict.DIVERGENT


def test_classify_mixed_inconclusive():
    values = list(np.cumsum([1.0, 0.5, 1.0, 0.5, 1.0, 0.5]))
    assert classify(values) == ConvergenceVerdict.INCONCLUSIVE


def test_classify_large_tail_inconclusive():
    # ratios below rho but the geometric tail is too large for the last value
    values = list(np.cumsum([1e-6, 0.7e-6, 0.49e-6, 0.343e-6, 100.0, 70.0, 49.0, 34.3]))
    assert classify(values) == ConvergenceVerdict.INCONCLUSIVE


def test_classify_needs_five_levels():
    with pytest.raises(InsufficientLevels):
        classify([1.0, 1.5, 1.75, 1.875])


def test_ratio_conventions():
    assert ratios_of([0.0, 0.0, 1.0, 0.5]) == [0.0, math.inf, 0.5]


def test_build_report_short_ladder_is_inconclusive(options):
    report = build_report([1, 2, 3, 4], [1.0, 1.5, 1.75, 1.875], [True] * 4, options)
    assert report.verdict == ConvergenceVerdict.INCONCLUSIVE
    assert report.total == math.inf


def test_build_report_skips_unreliable_levels(options):
    values = geometric(0.5, count=8)
    reliable = [True] * 8
    reliable[3] = False
    report = build_report(list(range(1, 9)), values, reliable, options)
    assert report.convergent
    assert report.reliable == reliable
    assert report.tail_estimate == pytest.approx(0.5**7)


def test_build_report_values_monotone(options, caplog):
    with caplog.at_level("WARNING", logger="quadrature.ladder"):
        report = build_report([1, 2, 3, 4, 5], [1.0, 2.0, 1.9, 3.0, 3.5], [True] * 5, options)
    assert report.values == [1.0, 2.0, 2.0, 3.0, 3.5]
    assert report.reliable == [True, True, False, True, True]
    assert "levels [3]" in caplog.text


def test_build_report_monotone_input_untouched(options, caplog):
    with caplog.at_level("WARNING", logger="quadrature.ladder"):
        report = build_report(list(range(1, 9)), geometric(0.5, count=8), [True] * 8, options)
    assert all(report.reliable)
    assert "decrease" not in caplog.text


def test_csv_layout(options):
    report = build_report([1, 2, 3, 4, 5], geometric(0.5, count=5), [True] * 5, options)
    lines = report.to_csv().splitlines()
    assert lines[0] == "m,value,increment,ratio,reliable"
    assert len(lines) == 6
    assert lines[-1].endswith(",,,true")


def test_entry_level():
    ladder = TruncationLadder(max_exp=12)
    assert ladder.entry_level(np.array([1j, 4j, 0.25j]).tolist()).tolist() == [1, 2, 2]
    ball = TruncationLadder(max_exp=12, domain="ball")
    assert ball.entry_level([0.25, 0.9, 0.001]).tolist() == [2, 1, 10]


def test_ladder_levels_and_thresholds():
    ladder = TruncationLadder(base=2.0, min_exp=3, max_exp=6)
    assert ladder.levels == [3, 4, 5, 6]
    assert ladder.threshold(3) == 0.125
    assert ladder.region(3).r_out == 8.0


def test_halfplane_ladder_convergent(options):
    # integral of |z + i|^-4 over the upper half-plane is pi / 4
    ladder = TruncationLadder(base=2.0, min_exp=1, max_exp=14)
    report = ladder_integrate(ladder, lambda z: np.abs(z + 1j) ** -4, tol=1e-9, max_cells=200000, options=options)
    assert report.convergent
    assert report.total == pytest.approx(math.pi / 4, rel=1e-3)


def test_halfplane_ladder_divergent(options):
    ladder = TruncationLadder(base=2.0, min_exp=1, max_exp=10)
    report = ladder_integrate(ladder, lambda z: np.abs(z + 1j) ** -2, tol=1e-7, max_cells=200000, options=options)
    assert report.verdict == ConvergenceVerdict.DIVERGENT


def test_disk_ladder_with_tail(options):
    # integral of delta^-1/2 over the unit disk is 2 pi
    ladder = TruncationLadder(base=2.0, min_exp=1, max_exp=14, domain="ball")
    report = ladder_integrate(
        ladder, lambda z: (1.0 - np.abs(z) ** 2) ** -0.5, tol=1e-10, max_cells=200000, options=options
    )
    assert report.convergent
    assert report.total == pytest.approx(2.0 * math.pi, rel=1e-6)


def test_linear_fit():
    slope, r2 = linear_fit_r2([1.0, 3.0, 5.0, 7.0, 9.0])
    assert slope == pytest.approx(2.0)
    assert r2 == pytest.approx(1.0)


@given(st.floats(0.05, 0.7), st.floats(1e-3, 1e3))
def test_geometric_ladders_converge(ratio, scale):
    assert classify(geometric(ratio, scale)) == ConvergenceVerdict.CONVERGENT


@given(st.floats(0.92, 2.0), st.floats(1e-3, 1e3))
def test_growing_ladders_diverge(ratio, scale):
    assert classify(geometric(ratio, scale)) == ConvergenceVerdict.DIVERGENT


@given(st.lists(st.floats(0.0, 10.0), min_size=5, max_size=12))
def test_never_convergent_above_rho(increments):
    options = ClassifierOptions()
    values = list(np.cumsum(increments))
    ratios = ratios_of(increments)[-3:]
    if any(r > options.rho for r in ratios):
        assert classify(values, increments, options) != ConvergenceVerdict.CONVERGENT
