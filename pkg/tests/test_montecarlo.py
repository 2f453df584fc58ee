import math

import numpy as np
import pytest

from ball.geometry import sqnorm
from ball.montecarlo import mc_ladder_integrate, seeds_for, shell_bounds, shell_nodes, shell_size
from quadrature.ladder import TruncationLadder

LADDER = TruncationLadder(base=2.0, min_exp=1, max_exp=10, domain="ball")


def volume_above(d: float) -> float:
    """Volume of {delta >= d} in the ball of C^2"""
    return 0.5 * math.pi**2 * (1.0 - d) ** 2


def test_shell_layout():
    assert shell_bounds(LADDER, 1) == (0.0, math.log(2.0))
    assert shell_bounds(LADDER, 3) == pytest.approx((2 * math.log(2.0), 3 * math.log(2.0)))
    assert shell_size(LADDER, 2, 2048) == 2048
    assert shell_size(LADDER, 9, 2048) == 8192
    assert shell_size(LADDER, 2, 1000) == 1024


def test_shell_nodes_lie_in_their_shell():
    pts, weights = shell_nodes(LADDER, 4, 512, 7)
    d = 1.0 - sqnorm(pts, 2)
    assert np.all((d >= 2.0**-4 - 1e-12) & (d <= 2.0**-3 + 1e-12))
    exact = volume_above(2.0**-4) - volume_above(2.0**-3)
    assert weights.sum() == pytest.approx(exact, rel=1e-2)


def test_shell_nodes_reproducible():
    a, _ = shell_nodes(LADDER, 2, 256, 3)
    b, _ = shell_nodes(LADDER, 2, 256, 3)
    c, _ = shell_nodes(LADDER, 2, 256, 4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_volume_of_ball():
    ladder = TruncationLadder(base=2.0, min_exp=1, max_exp=14, domain="ball")
    report, _ = mc_ladder_integrate(ladder, lambda z: np.ones(z.shape[:-1]), samples=1024, seed=5)
    assert report.convergent
    assert report.total == pytest.approx(volume_above(0.0), rel=1e-2)


def test_complex_integrand_total():
    # the mean of z1 over a rotation-invariant shell set vanishes
    report, value = mc_ladder_integrate(LADDER, lambda z: z[..., 0], samples=1024, seed=5, complex_values=True)
    assert abs(value) <= 1e-2 * report.last


def test_seeds():
    seeds = seeds_for(20240601)
    assert len(set(seeds)) == 3
    assert seeds == seeds_for(20240601)
    assert seeds != seeds_for(1)
