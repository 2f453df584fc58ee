import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catalog.functions import TestFunction
from core.errors import OutOfDomain
from quadrature.regions import RectRegion, halfplane_level
from whitney.decomposition import (
    WhitneySquare,
    comparability_range,
    comparability_ratio,
    levelset_fractions,
    overlap_counts,
    overlap_multiplicity,
    square_of,
    squares_meeting,
    squares_to_csv,
    squares_with_centers_in,
    subharmonic_bound_ratio,
)


def test_square_geometry():
    sq = WhitneySquare(1, -1)
    assert sq.extent == (0.5, 1.0, 0.5, 1.0)
    assert sq.center == 0.75 + 0.75j
    assert sq.area == 0.25
    x0, x1, y0, y1 = sq.enlarged(1.5)
    assert (x0, x1, y1) == (0.375, 1.125, 1.125)
    assert y0 == 0.375


def test_square_of():
    assert square_of(0.3 + 1.5j) == WhitneySquare(0, 0)
    assert square_of(3.0 + 0.3j) == WhitneySquare(12, -2)
    assert square_of(-0.1 + 1.0j) == WhitneySquare(-1, 0)
    with pytest.raises(OutOfDomain):
        square_of(1.0)


def test_squares_meeting_rectangle():
    assert squares_meeting(RectRegion(0.0, 1.0, 1.0, 2.0)) == [WhitneySquare(0, 0)]
    assert len(squares_meeting(RectRegion(0.0, 2.0, 1.0, 4.0))) == 3
    assert squares_meeting(RectRegion(0.0, 1.0, 2.0, 1.0)) == []


def test_squares_meeting_sector_covers_its_points():
    sector = halfplane_level(2, 2.0)
    found = set(squares_meeting(sector))
    rng = np.random.default_rng(5)
    r = sector.r_in * (sector.r_out / sector.r_in) ** rng.random(2000)
    th = sector.theta_lo + (sector.theta_hi - sector.theta_lo) * rng.random(2000)
    for z in r * np.exp(1j * th):
        assert square_of(z) in found


def test_centers_in_sector():
    sector = halfplane_level(3, 2.0)
    j, k = squares_with_centers_in(sector)
    assert len(j) > 0
    centers = (j + 0.5) * np.ldexp(1.0, k) + 1.5j * np.ldexp(1.0, k)
    assert sector.contains(centers).all()
    assert len(set(zip(j.tolist(), k.tolist()))) == len(j)


def test_overlap_bounded():
    counts = overlap_counts(np.array([0.3 + 1.5j, 1.0 + 1.0j, 0.5 + 0.75j]))
    assert counts.min() >= 1
    assert overlap_multiplicity(RectRegion(-4.0, 4.0, 0.01, 4.0), resolution=150) <= 6


def test_overlap_empty_points():
    assert overlap_multiplicity(points=np.zeros(0, dtype=complex)) == 0


def test_subharmonic_ratio_of_constant():
    one = TestFunction(kind="constant", c=1.0)
    assert subharmonic_bound_ratio(one, 2.0, 0.0, WhitneySquare(0, 0)) == pytest.approx(1.0, rel=1e-8)


def test_comparability_at_center():
    sq = WhitneySquare(0, 0)
    assert comparability_ratio(sq, sq.center, 10.0 + 1.0j) == pytest.approx(1.0)


def test_levelset_fractions():
    upper = lambda z: z.imag > 1.5  # noqa: E731
    frac = levelset_fractions(upper, np.array([0, 0]), np.array([0, 2]))
    assert frac.tolist() == [0.5, 1.0]


def test_csv():
    text = squares_to_csv([WhitneySquare(0, 0), WhitneySquare(-3, 2)], {"ratio": [1.0, 0.5]})
    assert text == "j,k,x0,x1,y0,y1,ratio\n0,0,0.0,1.0,1.0,2.0,1.0\n-3,2,-12.0,-8.0,4.0,8.0,0.5\n"
    assert squares_to_csv([]) == "j,k,x0,x1,y0,y1\n"


def test_comparability_range():
    lo, hi = comparability_range([WhitneySquare(0, 0), WhitneySquare(5, -3), WhitneySquare(-2, 4)])
    assert 1.0 / 3.0 <= lo < 1.0 < hi <= 3.0
    assert all(math.isnan(v) for v in comparability_range([]))


@pytest.mark.parametrize(
    "z, j",
    [(complex(-5e-324, 2.0), -1), (complex(5e-324, 2.0), 0), (complex(-1e-310, 0.75), -1), (complex(-0.0, 1.0), 0)],
)
def test_tiny_real_parts(z, j):
    sq = square_of(z)
    assert bool(sq.contains(z))
    assert sq.j == j


@given(st.floats(-100.0, 100.0), st.floats(1e-6, 1e3))
def test_partition(x, y):
    z = complex(x, y)
    sq = square_of(z)
    assert bool(sq.contains(z))
    assert sq.area == pytest.approx(sq.side**2)
    assert math.isclose(sq.side, math.ldexp(1.0, sq.k))
