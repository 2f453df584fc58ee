import math

import numpy as np
import pytest

from ball.distance import (
    BallLevelSet,
    angular_cells,
    ball_kernel_sum,
    candidate_gap_ball,
    check_contradiction_chain,
    check_decomposition_ball,
    decompose_ball,
    default_ball_samples,
    disk_levelset_cells,
    estimate_omega2,
    omega_member,
    psi_functional,
    psi_classify,
)
from ball.geometry import BallIntegration
from ball.montecarlo import seeds_for
from catalog.functions import TestFunction
from core.errors import OutOfDomain, UnboundedFunction
from core.params import validate_ball
from core.schemas.report import ConvergenceVerdict
from quadrature.ladder import TruncationLadder

PARAMS = validate_ball(1, 2.0, 1.0, 2.0)
PARAMS_C2 = validate_ball(2, 2.0, 1.5, 3.0)
HALF_POLE = TestFunction(kind="ball_pole", s=0.5)


def test_omega_membership(ball_pole):
    assert omega_member(ball_pole, 1.5, 1.0, 0.9)
    assert not omega_member(ball_pole, 1.5, 1.0, -0.9)
    with pytest.raises(OutOfDomain):
        omega_member(ball_pole, 1.5, 1.0, 1.0)
    f = TestFunction(kind="ball_pole", s=1.0, n=2)
    assert omega_member(f, 1.5, 1.0, np.array([0.9, 0.0]), n=2)


def test_levelset_scaling(ball_pole):
    assert BallLevelSet(f=ball_pole, eps=1.0, s=1.0).scaled(4.0).eps == 0.25


def test_angular_cells(ball_ladder):
    assert angular_cells(ball_ladder, 1) == 8
    assert angular_cells(ball_ladder, 3) == 32


def test_disk_cells_tile_the_ladder(ball_pole, ball_ladder):
    cells = disk_levelset_cells(BallLevelSet(f=ball_pole, eps=0.0, s=1.0), ball_ladder)
    assert cells.areas.sum() == pytest.approx(math.pi * (1.0 - 2.0**-10), rel=1e-3)
    assert cells.full.all()
    assert set(cells.levels.tolist()) == set(ball_ladder.levels)


def test_disk_cells_refine_the_boundary(ball_pole, ball_ladder):
    cells = disk_levelset_cells(BallLevelSet(f=ball_pole, eps=1.5, s=1.0), ball_ladder)
    assert len(cells) > 0
    assert not cells.full.all()
    assert np.all(np.abs(cells.centers - 1.0) < 1.0)


def test_ball_kernel_sum():
    assert ball_kernel_sum(np.array([0j]), np.array([0.5 + 0j]), np.array([2.0]), 4.0, 1)[0] == 2.0
    z = np.zeros((3, 2), dtype=complex)
    centers = np.array([[0.5, 0.0], [0.0, 0.5]], dtype=complex)
    out = ball_kernel_sum(z, centers, np.array([1.0, 2.0]), 5.0, 2)
    assert out.shape == (3,)
    assert np.allclose(out, 3.0)


def test_psi_empty_levelset(ball_pole, disk_setup):
    report = psi_functional(ball_pole, 3.0, PARAMS, disk_setup)
    assert report.convergent
    assert report.values == [0.0] * len(disk_setup.ladder.levels)


def test_psi_member_converges(disk_setup, fast_settings):
    verdict, report, seeds = psi_classify(HALF_POLE, 0.5, PARAMS, disk_setup)
    assert verdict == ConvergenceVerdict.CONVERGENT
    assert seeds is None
    assert report.values[-1] > 0


def test_psi_c2_reports_seeds():
    setup = BallIntegration(ladder=TruncationLadder(max_exp=8, domain="ball"), seed=3)
    f = TestFunction(kind="ball_pole", s=0.5, n=2)
    verdict, report, seeds = psi_classify(f, 10.0, PARAMS_C2, setup, samples=256)
    assert seeds == seeds_for(3)
    assert verdict == ConvergenceVerdict.CONVERGENT
    assert report.verdict == verdict


def test_estimate_zero_function():
    est = estimate_omega2(TestFunction(kind="zero", domain="ball"), PARAMS)
    assert (est.eps_lo, est.eps_hi) == (0.0, 0.0)
    assert est.to_json_dict()["domain"] == "ball"
    assert est.to_json_dict()["n"] == 1


def test_estimate_c2_policy_is_statistical():
    est = estimate_omega2(TestFunction(kind="zero", domain="ball", n=2), PARAMS_C2)
    assert est.policy["statistical"] is True


def test_estimate_rejects_unbounded(ball_pole):
    with pytest.raises(UnboundedFunction):
        estimate_omega2(ball_pole, validate_ball(1, 4.0, 0.5, 1.0))


def test_decompose_is_linear(disk_setup):
    one = decompose_ball(HALF_POLE, 0.5, PARAMS, disk_setup, check_psi=False)
    two = decompose_ball(HALF_POLE.scaled(2.0), 1.0, PARAMS, disk_setup, check_psi=False)
    z = np.array([0j, 0.5 + 0.3j, -0.7j])
    assert len(one.nodes) > 0
    assert np.allclose(two.f2(z), 2.0 * one.f2(z))


def test_decompose_above_sup(disk_setup):
    dec = decompose_ball(HALF_POLE, 5.0, PARAMS, disk_setup, check_psi=False)
    z = np.array([0j, 0.5j])
    assert np.all(dec.f2(z) == 0)
    assert len(dec.nodes) == 0


def test_decompose_c2_shapes():
    setup = BallIntegration(ladder=TruncationLadder(max_exp=6, domain="ball"), seed=3)
    f = TestFunction(kind="ball_pole", s=0.5, n=2)
    dec = decompose_ball(f, 0.5, PARAMS_C2, setup, check_psi=False, samples=256)
    assert dec.f2(np.zeros((4, 2), dtype=complex)).shape == (4,)


def test_default_samples():
    flat = default_ball_samples(1)
    assert len(flat) == 10
    assert max(abs(complex(z)) for z in flat) == pytest.approx(0.9)
    pts = default_ball_samples(2, count=4, radius=0.5)
    assert all(z.shape == (2,) for z in pts)
    assert all(np.sum(np.abs(z) ** 2) <= 0.25 + 1e-12 for z in pts)


def test_candidate_gap_of_f_itself(ball_pole):
    assert candidate_gap_ball(ball_pole, ball_pole.values, 1.0) == 0.0


@pytest.mark.slow
def test_decomposition_halves(disk_setup):
    report = check_decomposition_ball(HALF_POLE, 0.3, PARAMS, disk_setup, samples=default_ball_samples(1, count=3))
    assert report.residual <= 1e-3
    assert report.f2_verdict == ConvergenceVerdict.CONVERGENT
    assert report.cells > 0


@pytest.mark.slow
def test_contradiction_chain(disk_setup):
    report = check_contradiction_chain(HALF_POLE, 0.3, PARAMS, disk_setup)
    assert report.holds
    assert len(report.checks) == 3


@pytest.mark.slow
def test_distance_member_and_outside(ball_pole):
    member = estimate_omega2(HALF_POLE, PARAMS, eps_tol=2.0**-4)
    assert member.eps_lo == 0.0
    outside = estimate_omega2(ball_pole, PARAMS, eps_tol=2.0**-4)
    assert outside.eps_lo >= 0.2
