"""
The unit ball of C^n (n = 1, 2) with defining function delta(z) = 1 - |z|^2.

Points of the disk are complex numbers; points of the ball in C^2 are arrays
with a last axis of length 2. One-dimensional integrals run on the disk
shell ladder with adaptive quadrature, two-dimensional ones by stratified
sampling of the same shells.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate as sp_integrate

from ball.montecarlo import DEFAULT_SAMPLES, mc_ladder_integrate
from catalog.functions import TestFunction
from core.config import get_settings
from core.errors import HypothesisViolation, NotConvergent, NotReproducible, OutOfDomain, UnsupportedDimension
from core.params import SUPPORTED_DIMENSIONS
from core.schemas.report import LadderReport, NormInfResult, NormResult
from quadrature.ladder import ClassifierOptions, TruncationLadder, ladder_integrate, ladder_integrate_complex

logger = logging.getLogger(__name__)


def _check_dimension(n: int) -> None:
    if n not in SUPPORTED_DIMENSIONS:
        raise UnsupportedDimension(n)


def sqnorm(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.abs(z) ** 2 if n == 1 else np.sum(np.abs(z) ** 2, axis=-1)


def inner(z, xi, n: int) -> np.ndarray:
    """Hermitian product <z, xi> = sum z_k conj(xi_k)"""
    z = np.asarray(z, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    return z * np.conj(xi) if n == 1 else np.sum(z * np.conj(xi), axis=-1)


def _require_ball(z, n: int) -> None:
    if np.any(sqnorm(z, n) >= 1.0):
        raise OutOfDomain(np.asarray(z).tolist(), f"unit ball of C^{n}")


def delta(z, n: int = 1):
    """1 - |z|^2"""
    _check_dimension(n)
    _require_ball(z, n)
    value = 1.0 - sqnorm(z, n)
    return float(value) if np.ndim(value) == 0 else value


def hr(z, xi, n: int = 1):
    """1 - <z, xi>, holomorphic in z"""
    _check_dimension(n)
    _require_ball(z, n)
    _require_ball(xi, n)
    value = 1.0 - inner(z, xi, n)
    return complex(value) if np.ndim(value) == 0 else value


@lru_cache(maxsize=None)
def normalizing_constant(n: int, t: float) -> float:
    """c_{n,t} with c * integral of delta^t over the ball = 1, by radial quadrature"""
    _check_dimension(n)
    if not t > -1:
        raise HypothesisViolation("t > -1", t=t)
    if n == 1:
        volume, _ = sp_integrate.quad(lambda r: (1.0 - r * r) ** t * r, 0.0, 1.0, epsabs=0.0, epsrel=1e-13)
        volume *= 2.0 * math.pi
    else:
        volume, _ = sp_integrate.quad(lambda r: (1.0 - r * r) ** t * r**3, 0.0, 1.0, epsabs=0.0, epsrel=1e-13)
        volume *= 2.0 * math.pi**2
    return 1.0 / volume


def _kernel(z, xi, t: float, n: int):
    return normalizing_constant(n, t) * np.exp(-(n + 1.0 + t) * np.log(1.0 - inner(z, xi, n)))


def kernel_ball(z, xi, t: float, n: int = 1):
    """Weighted Bergman kernel c_{n,t} (1 - <z, xi>)^-(n+1+t)"""
    _check_dimension(n)
    _require_ball(z, n)
    _require_ball(xi, n)
    value = _kernel(z, xi, t, n)
    return complex(value) if np.ndim(value) == 0 else value


# ---------------------------------------------------------------------- ball integration


class BallIntegration(BaseModel):
    """Ladder and discretisation settings of ball integrals"""

    model_config = ConfigDict(frozen=True)

    ladder: TruncationLadder = Field(default_factory=lambda: TruncationLadder.from_settings("ball"))
    tol: float = Field(default_factory=lambda: get_settings().quad_tol)
    max_cells: int = Field(default_factory=lambda: get_settings().max_cells)
    samples: int = Field(DEFAULT_SAMPLES, description="Sobol points per shell (n=2)")
    seed: int = Field(default_factory=lambda: get_settings().seed)
    threads: int = 1


def integrate_ball(
    n: int,
    integrand: Callable[[np.ndarray], np.ndarray],
    setup: Optional[BallIntegration] = None,
    complex_values: bool = False,
) -> Tuple[LadderReport, complex]:
    """Shell ladder of an integral over the ball; complex integrands return their total too"""
    _check_dimension(n)
    setup = setup or BallIntegration()
    options = ClassifierOptions.from_settings()
    if n == 2:
        return mc_ladder_integrate(setup.ladder, integrand, setup.samples, setup.seed, options, complex_values)
    if complex_values:
        return ladder_integrate_complex(
            setup.ladder, integrand, tol=setup.tol, max_cells=setup.max_cells, options=options, threads=setup.threads
        )
    report = ladder_integrate(
        setup.ladder, integrand, tol=setup.tol, max_cells=setup.max_cells, options=options, threads=setup.threads
    )
    return report, complex(report.total)


def _delta(z, n: int) -> np.ndarray:
    return np.maximum(1.0 - sqnorm(z, n), 0.0)


def reproduce_ball(
    f: TestFunction,
    z,
    t: float,
    n: int = 1,
    setup: Optional[BallIntegration] = None,
) -> complex:
    """Integral of f(xi) K_t(z, xi) delta^t(xi) dV(xi); must classify Convergent"""
    _check_dimension(n)
    _require_ball(z, n)
    if f.is_zero:
        return 0j
    z = np.asarray(z, dtype=complex)

    def integrand(xi):
        return f.values(xi) * _kernel(z, xi, t, n) * _delta(xi, n) ** t

    report, value = integrate_ball(n, integrand, setup, complex_values=True)
    if not report.convergent:
        raise NotReproducible(report.verdict.value)
    return value


def norm_ball(
    f: TestFunction,
    q: float,
    s: float,
    n: int = 1,
    setup: Optional[BallIntegration] = None,
) -> NormResult:
    """A^q_s quasi-norm: (integral of |f|^q delta^(sq-n-1) dV)^(1/q)"""
    _check_dimension(n)
    if not q > 0:
        raise HypothesisViolation("q > 0", q=q)
    exponent = s * q - n - 1.0

    def integrand(xi):
        return np.abs(f.values(xi)) ** q * _delta(xi, n) ** exponent

    report, _ = integrate_ball(n, integrand, setup)
    value = report.total ** (1.0 / q) if report.convergent else math.inf
    logger.info("ball norm %s q=%g s=%g: %s (%s)", f.label, q, s, value, report.verdict.value)
    return NormResult(value=value, ladder=report)


class BallSupGrid(BaseModel):
    """Polar grid log-spaced in delta; in C^2 the radius is split between the coordinates"""

    model_config = ConfigDict(frozen=True)

    extent_exp: int = Field(14, ge=3, description="delta spans base^-extent_exp .. 1")
    per_octave: int = Field(16, ge=1)
    angular: int = Field(256, ge=4, description="Angles in [0, 2 pi), starting at 0")
    split: int = Field(9, ge=2, description="Splits of the radius between z1 and z2 (n=2)")
    base: float = Field(2.0, gt=1.0)

    def deltas(self) -> np.ndarray:
        return self.base ** (-np.arange(0, self.extent_exp * self.per_octave + 1) / self.per_octave)

    def points(self, n: int) -> np.ndarray:
        r = np.sqrt(1.0 - self.deltas())
        theta = 2.0 * math.pi * np.arange(self.angular) / self.angular
        z1 = r[:, None] * np.exp(1j * theta)[None, :]
        if n == 1:
            return z1
        phi = np.linspace(0.0, 0.5 * math.pi, self.split)
        pts = np.stack(
            np.broadcast_arrays(z1[:, :, None] * np.cos(phi), r[:, None, None] * np.sin(phi)), axis=-1
        )
        return pts


def norm_inf_ball(
    f: TestFunction,
    s: float,
    n: int = 1,
    grid: Optional[BallSupGrid] = None,
    growth: float = 1.5,
) -> NormInfResult:
    """Grid maximum of |f| delta^s with the unbounded flag and the analytic gap"""
    _check_dimension(n)
    grid = grid or BallSupGrid()
    z = grid.points(n)
    values = np.abs(f.values(z)) * _delta(z, n) ** s
    values = np.nan_to_num(values, nan=0.0)
    flat = int(np.argmax(values))
    top = float(values.flat[flat])
    keep = grid.deltas() >= grid.base ** (-(grid.extent_exp - 2))
    inner_top = float(values[keep].max())
    on_edge = np.unravel_index(flat, values.shape)[0] == values.shape[0] - 1
    analytic = f.analytic_sup_norm(s)
    unbounded = bool(on_edge and inner_top > 0 and top > growth * inner_top) or analytic == math.inf
    gap = (analytic - top) / analytic if analytic is not None and math.isfinite(analytic) and analytic > 0 else None
    arg = np.asarray(z).reshape(-1, n)[flat] if n == 2 else np.asarray(z).flat[flat]
    argmax = [float(v) for c in np.atleast_1d(arg) for v in (c.real, c.imag)]
    return NormInfResult(value=top, unbounded=unbounded, analytic=analytic, relative_gap=gap, argmax=argmax)


def embedding_ratio_ball(
    f: TestFunction,
    q: float,
    s: float,
    n: int = 1,
    setup: Optional[BallIntegration] = None,
    grid: Optional[BallSupGrid] = None,
) -> float:
    """||f||_{A^infinity_s} / ||f||_{A^q_s}, finite for members of A^q_s"""
    if f.is_zero:
        return 0.0
    norm = norm_ball(f, q, s, n, setup)
    if not norm.ladder.convergent:
        raise NotConvergent(0.0, norm.verdict.value)
    return norm_inf_ball(f, s, n, grid).value / norm.value


# ---------------------------------------------------------------------- Forelli-Rudin type estimates


def _convergent_total(report: LadderReport) -> float:
    if not report.convergent:
        raise NotConvergent(0.0, report.verdict.value)
    return report.total


def be1_ratio(
    f: TestFunction,
    r: float,
    s: float,
    p: float,
    z,
    n: int = 1,
    setup: Optional[BallIntegration] = None,
) -> float:
    """
    Empirical constant of the p <= 1 integral inequality:

        (int |f| |1 - <z,xi>|^r delta^s dV)^p / int |f|^p |1 - <z,xi>|^(rp) delta^(p(s+n+1)-(n+1)) dV

    Zero functions give 0 by convention.
    """
    _check_dimension(n)
    if not r > 0:
        raise HypothesisViolation("r > 0", r=r)
    if not 0 < p <= 1:
        raise HypothesisViolation("0 < p <= 1", p=p)
    if not s > -1:
        raise HypothesisViolation("s > -1", s=s)
    if not p * (s + n + 1) > n:
        raise HypothesisViolation("p(s+n+1) > n", p=p, s=s, n=n)
    _require_ball(z, n)
    if f.is_zero:
        logger.warning("be1 ratio of the zero function is 0/0; reporting 0")
        return 0.0
    z = np.asarray(z, dtype=complex)
    rhs_exp = p * (s + n + 1.0) - (n + 1.0)

    def lhs(xi):
        return np.abs(f.values(xi)) * np.abs(1.0 - inner(z, xi, n)) ** r * _delta(xi, n) ** s

    def rhs(xi):
        return np.abs(f.values(xi)) ** p * np.abs(1.0 - inner(z, xi, n)) ** (r * p) * _delta(xi, n) ** rhs_exp

    left = _convergent_total(integrate_ball(n, lhs, setup)[0])
    right = _convergent_total(integrate_ball(n, rhs, setup)[0])
    return left**p / right


def be2_ratio(
    xi,
    beta: float,
    sigma: float,
    n: int = 1,
    setup: Optional[BallIntegration] = None,
) -> float:
    """Integral of |1 - <z,xi>|^-beta delta^(sigma-1)(z) dV(z) divided by delta(xi)^(sigma+n-beta)"""
    _check_dimension(n)
    if not sigma > 0:
        raise HypothesisViolation("sigma > 0", sigma=sigma)
    if not sigma + n - beta < 0:
        raise HypothesisViolation("sigma + n - beta < 0", sigma=sigma, n=n, beta=beta)
    _require_ball(xi, n)
    xi = np.asarray(xi, dtype=complex)

    def integrand(z):
        return np.abs(1.0 - inner(z, xi, n)) ** (-beta) * _delta(z, n) ** (sigma - 1.0)

    total = _convergent_total(integrate_ball(n, integrand, setup)[0])
    return total / (1.0 - float(sqnorm(xi, n))) ** (sigma + n - beta)


def f1_kernel_bound_ratio(
    z,
    t: float,
    s: float,
    n: int = 1,
    setup: Optional[BallIntegration] = None,
) -> float:
    """delta(z)^s times the integral of delta^(t-s)(xi) |1 - <z,xi>|^-(n+t+1) dV(xi); bounded in z"""
    _check_dimension(n)
    if not t > s:
        raise HypothesisViolation("t > s", t=t, s=s)
    _require_ball(z, n)
    z = np.asarray(z, dtype=complex)

    def integrand(xi):
        return _delta(xi, n) ** (t - s) * np.abs(1.0 - inner(z, xi, n)) ** (-(n + t + 1.0))

    total = _convergent_total(integrate_ball(n, integrand, setup)[0])
    return total * (1.0 - float(sqnorm(z, n))) ** s


def radial_point(m: int, n: int = 1, direction: complex = 1.0) -> np.ndarray:
    """(1 - 2^-m) times a unit vector along the first coordinate"""
    r = 1.0 - 2.0 ** (-m)
    u = direction / abs(direction)
    if n == 1:
        return np.asarray(r * u, dtype=complex)
    return np.array([r * u, 0.0], dtype=complex)
