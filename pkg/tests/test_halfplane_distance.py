import math

import numpy as np
import pytest

from catalog.functions import TestFunction
from core.errors import NotConvergent, OutOfDomain, UnboundedFunction
from core.params import validate_halfplane
from core.schemas.report import ConvergenceVerdict
from halfplane.distance import (
    LevelSet,
    check_decomposition,
    decompose,
    default_samples,
    estimate_l2,
    kernel_sum,
    levelset_cells,
    levelset_member,
    phi_functional,
)
from quadrature.ladder import TruncationLadder

PARAMS = validate_halfplane(2.0, 0.0, 1.0)


def test_levelset_membership(pure_power):
    assert levelset_member(pure_power, 0.5, 1.0, 1j)
    assert not levelset_member(pure_power, 0.5, 1.0, 10.0 + 1.0j)
    with pytest.raises(OutOfDomain):
        levelset_member(pure_power, 0.5, 1.0, 2.0)


def test_levelset_scaling(pure_power):
    level = LevelSet(f=pure_power.scaled(2.0), eps=1.0, t=1.0)
    assert level.scaled(2.0).eps == 0.5


def test_levelset_cells_cover_sector(pure_power, halfplane_ladder):
    # {sin(arg z) >= 1/2} is the sector pi/6 <= arg z <= 5 pi/6
    cells = levelset_cells(LevelSet(f=pure_power, eps=0.5, t=1.0), halfplane_ladder)
    assert len(cells) > 0
    assert np.all(np.abs(np.angle(cells.centers) - math.pi / 2) <= math.pi / 3 + 0.5)
    assert np.all((cells.fractions > 0) & (cells.fractions <= 1))


def test_kernel_sum():
    value = kernel_sum(np.array([1j]), np.array([1j]), np.array([1.0]), 2.0)
    assert value[0] == pytest.approx(0.25)
    assert kernel_sum(np.array([1j]), np.zeros(0, dtype=complex), np.zeros(0), 2.0)[0] == 0.0


def test_phi_empty_levelset(pure_power, halfplane_ladder):
    report = phi_functional(pure_power, 2.0, PARAMS, halfplane_ladder)
    assert report.convergent
    assert report.values == [0.0] * len(halfplane_ladder.levels)


def test_phi_member_function_converges(power_shift, halfplane_ladder, fast_settings):
    report = phi_functional(power_shift, 0.1, PARAMS, halfplane_ladder)
    assert report.verdict == ConvergenceVerdict.CONVERGENT
    assert report.values[-1] > 0


def test_estimate_zero_function():
    est = estimate_l2(TestFunction(kind="zero"), PARAMS)
    assert (est.eps_lo, est.eps_hi) == (0.0, 0.0)


def test_estimate_rejects_unbounded(pure_power):
    # |z^-1| y^1.5 is unbounded
    with pytest.raises(UnboundedFunction):
        estimate_l2(pure_power, validate_halfplane(2.0, 1.0, 1.0))


def test_decompose_is_linear(power_shift, halfplane_ladder):
    one = decompose(power_shift, 0.1, PARAMS, halfplane_ladder, check_phi=False)
    two = decompose(power_shift.scaled(2.0), 0.2, PARAMS, halfplane_ladder, check_phi=False)
    z = np.array([1j, 2.0 + 0.5j, -3.0 + 4.0j])
    assert len(one.nodes) > 0
    assert np.allclose(two.f2(z), 2.0 * one.f2(z))


def test_small_level_recovers_the_function(power_shift, halfplane_ladder):
    # with eps far below the sup the level set fills the ladder region and f2 is nearly f
    dec = decompose(power_shift, 1e-4, PARAMS, halfplane_ladder, check_phi=False)
    z = np.array([1j, 0.5 + 0.25j])
    exact = power_shift.values(z)
    assert np.all(np.abs(dec.f2(z) - exact) <= 0.05 * np.abs(exact))


def test_decompose_above_sup(power_shift, halfplane_ladder):
    dec = decompose(power_shift, 1.0, PARAMS, halfplane_ladder, check_phi=False)
    z = np.array([1j, 1.0 + 1.0j])
    assert np.all(dec.f2(z) == 0)
    assert len(dec.nodes) == 0


@pytest.mark.slow
def test_decompose_requires_convergence(pure_power, halfplane_ladder, fast_settings):
    with pytest.raises(NotConvergent):
        decompose(pure_power, 0.3, PARAMS, halfplane_ladder)


def test_default_samples():
    samples = default_samples()
    assert len(samples) == 20
    assert all(z.imag > 0 for z in samples)


@pytest.mark.slow
def test_decomposition_halves(power_shift):
    report = check_decomposition(power_shift, 0.05, PARAMS, samples=[1j, 1.0 + 2.0j])
    assert report.residual <= 2e-3
    assert report.f2_verdict == ConvergenceVerdict.CONVERGENT
    assert math.isfinite(report.f2_norm)
    assert report.cells > 0


@pytest.mark.slow
def test_distance_of_member_is_zero(power_shift):
    est = estimate_l2(power_shift, PARAMS, eps_tol=2.0**-4)
    assert est.eps_lo == 0.0
    assert est.eps_hi <= 2.0**-4 * est.norm_inf
    assert est.steps[0].eps == pytest.approx(1.05 * est.norm_inf)


@pytest.mark.slow
def test_distance_of_pure_power():
    est = estimate_l2(TestFunction(kind="pure_power", t=1.0), PARAMS, eps_tol=2.0**-5)
    assert est.eps_lo >= 0.85
    assert est.eps_hi <= 1.05
