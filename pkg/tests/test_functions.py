import math

import numpy as np
import pytest
from pydantic import ValidationError

from catalog.functions import TestFunction
from core.errors import OutOfDomain


def test_closed_forms(power_shift, pure_power, ball_pole):
    assert power_shift(1j) == pytest.approx(-0.25)
    assert pure_power(1j) == pytest.approx(-1j)
    assert ball_pole(0.5 + 0j) == pytest.approx(2.0)


def test_monomial_in_c2():
    f = TestFunction(kind="monomial", exponents=(1, 1), n=2, coeff=2.0)
    assert f.domain == "ball"
    z = np.array([[0.5, 0.5j]])
    assert f.values(z)[0] == pytest.approx(0.5j)


def test_vectorised_shapes():
    f = TestFunction(kind="monomial", exponents=(2, 0), n=2)
    z = np.zeros((3, 4, 2), dtype=complex)
    assert f.values(z).shape == (3, 4)


def test_scaling_and_label(pure_power):
    g = pure_power.scaled(2.0)
    assert g(1j) == pytest.approx(-2j)
    assert g.label == "2*pure_power(1.0)"
    assert TestFunction(kind="zero").is_zero


def test_out_of_domain(power_shift, ball_pole):
    with pytest.raises(OutOfDomain):
        power_shift(1.0 + 0j)
    with pytest.raises(OutOfDomain):
        ball_pole(1.0 + 0j)


def test_validation():
    with pytest.raises(ValidationError):
        TestFunction(kind="power_shift")
    with pytest.raises(ValidationError):
        TestFunction(kind="ball_pole", s=1.0, domain="halfplane")
    with pytest.raises(ValidationError):
        TestFunction(kind="monomial", exponents=(1,), n=2)


def test_analytic_sup_norms(power_shift, pure_power, ball_pole):
    assert pure_power.analytic_sup_norm(1.0) == 1.0
    assert pure_power.analytic_sup_norm(0.5) == math.inf
    assert power_shift.analytic_sup_norm(1.0) == pytest.approx(0.25)
    assert ball_pole.analytic_sup_norm(1.0) == 2.0
    assert ball_pole.analytic_sup_norm(0.5) == math.inf


def test_membership(power_shift, pure_power, ball_pole):
    assert power_shift.membership(2.0, 0.0)
    assert pure_power.membership(2.0, 0.0) is False
    assert TestFunction(kind="ball_pole", s=0.5).membership(2.0, 1.0)
    assert ball_pole.membership(2.0, 1.0) is False
