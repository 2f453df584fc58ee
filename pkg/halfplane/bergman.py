"""
Bergman kernels, the representation formula and weighted norms on the upper half-plane.

All improper integrals go through truncation ladders; a norm or a reproduced
value is only reported when its ladder classifies Convergent.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate as sp_integrate
from scipy.special import beta as beta_fn
from scipy.special import gamma

from catalog.functions import TestFunction
from core.config import get_settings
from core.errors import HypothesisViolation, NotConvergent, NotReproducible, OutOfDomain
from core.params import validate_norm
from core.schemas.report import ConvergenceVerdict, NormInfResult, NormResult
from quadrature.ladder import (
    ClassifierOptions,
    TruncationLadder,
    ladder_integrate,
    ladder_integrate_complex,
)

logger = logging.getLogger(__name__)


class SupGrid(BaseModel):
    """Log-spaced polar grid used for weighted sup-norms"""

    model_config = ConfigDict(frozen=True)

    extent_exp: int = Field(12, ge=3, description="Radii span base^-extent_exp .. base^extent_exp")
    per_octave: int = Field(16, ge=1, description="Radial points per factor of base")
    angular: int = Field(181, ge=3, description="Uniform angles in (0, pi); forced odd so pi/2 is a node")
    base: float = Field(2.0, gt=1.0, description="Radial base")
    center: float = Field(0.0, description="Horizontal centre of the polar grid")

    def radii(self) -> np.ndarray:
        n = self.extent_exp * self.per_octave
        return self.base ** (np.arange(-n, n + 1) / self.per_octave)

    def angles(self) -> np.ndarray:
        m = self.angular if self.angular % 2 else self.angular + 1
        uniform = np.linspace(0.0, math.pi, m + 2)[1:-1]
        edge = self.base ** (-np.arange(1.0, self.extent_exp + 1))
        return np.unique(np.concatenate([uniform, edge, math.pi - edge]))

    def points(self) -> np.ndarray:
        rr, tt = np.meshgrid(self.radii(), self.angles(), indexing="ij")
        return self.center + rr * np.exp(1j * tt)

    def shrunk(self, by: int = 2) -> "SupGrid":
        return self.model_copy(update={"extent_exp": self.extent_exp - by})


# ---------------------------------------------------------------------- kernel


def kernel(z, w, beta: float):
    """((beta+1)/pi) (w-bar - z)^-(2+beta), principal branch"""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z.imag <= 0):
        raise OutOfDomain(z, "upper half-plane")
    if np.any(w.imag <= 0):
        raise OutOfDomain(w, "upper half-plane")
    value = _kernel(z, w, beta)
    return complex(value) if value.ndim == 0 else value


def _kernel(z, w, beta: float):
    # Im(w-bar - z) < 0, so the principal log is continuous here
    return (beta + 1.0) / math.pi * np.exp(-(2.0 + beta) * np.log(np.conj(w) - z))


def reproducing_kernel(z, w, beta: float):
    """
    Reproducing kernel of the weight y^beta dm2:
    ((beta+1)/(4 pi)) ((z - w-bar)/(2i))^-(2+beta).

    This is kernel(z, w, beta) times (-2i)^(2+beta)/4; it is the kernel the
    representation formula and the level-set decomposition integrate against.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(z.imag <= 0):
        raise OutOfDomain(z, "upper half-plane")
    if np.any(w.imag <= 0):
        raise OutOfDomain(w, "upper half-plane")
    value = _reproducing_kernel(z, w, beta)
    return complex(value) if value.ndim == 0 else value


def _reproducing_kernel(z, w, beta: float):
    # Re((z - w-bar)/(2i)) = (Im z + Im w)/2 > 0
    return (beta + 1.0) / (4.0 * math.pi) * np.exp(-(2.0 + beta) * np.log((z - np.conj(w)) / 2j))


def lemma1_min_beta(p: float, alpha: float) -> float:
    """Smallest beta for which the representation formula holds on A^p_alpha"""
    validate_norm(p, alpha=alpha)
    if p <= 1:
        return (2.0 + alpha) / p - 2.0
    return (1.0 + alpha) / p - 1.0


def _ladder(ladder: Optional[TruncationLadder]) -> TruncationLadder:
    return ladder if ladder is not None else TruncationLadder.from_settings("halfplane")


def _quad(tol: Optional[float], max_cells: Optional[int]):
    s = get_settings()
    return (tol if tol is not None else s.quad_tol), (max_cells if max_cells is not None else s.max_cells)


def reproduce(
    f: TestFunction,
    z: complex,
    beta: float,
    ladder: Optional[TruncationLadder] = None,
    tol: Optional[float] = None,
    p: Optional[float] = None,
    alpha: Optional[float] = None,
    max_cells: Optional[int] = None,
    threads: int = 1,
) -> complex:
    """
    Evaluate f at z through the representation formula with kernel order beta.

    When (p, alpha) are given, f must belong to A^p_alpha and beta must clear
    the admissibility bound for that space.
    """
    z = complex(z)
    if not z.imag > 0:
        raise OutOfDomain(z, "upper half-plane")
    if p is not None and alpha is not None:
        bound = lemma1_min_beta(p, alpha)
        if beta < bound:
            raise HypothesisViolation("beta >= min admissible beta", beta=beta, bound=bound, p=p, alpha=alpha)
        if f.membership(p, alpha) is False:
            raise HypothesisViolation("f in A^p_alpha", function=f.label, p=p, alpha=alpha)
    if f.is_zero:
        return 0j
    tol, max_cells = _quad(tol, max_cells)

    def integrand(w):
        return f.values(w) * w.imag**beta * _reproducing_kernel(z, w, beta)

    report, value = ladder_integrate_complex(
        _ladder(ladder), integrand, tol=tol, max_cells=max_cells, options=ClassifierOptions.from_settings(), threads=threads
    )
    if report.verdict != ConvergenceVerdict.CONVERGENT:
        raise NotReproducible(report.verdict.value)
    return value


def norm_p_alpha(
    f: TestFunction,
    p: float,
    alpha: float,
    ladder: Optional[TruncationLadder] = None,
    tol: Optional[float] = None,
    max_cells: Optional[int] = None,
    threads: int = 1,
) -> NormResult:
    """||f||_{p,alpha}; infinite (with the ladder attached) when the integral is not Convergent"""
    validate_norm(p, alpha=alpha)
    tol, max_cells = _quad(tol, max_cells)

    def integrand(w):
        return np.abs(f.values(w)) ** p * w.imag**alpha

    report = ladder_integrate(
        _ladder(ladder), integrand, tol=tol, max_cells=max_cells, options=ClassifierOptions.from_settings(), threads=threads
    )
    value = report.total ** (1.0 / p) if report.convergent else math.inf
    logger.info("norm %s p=%g alpha=%g: %s (%s)", f.label, p, alpha, value, report.verdict.value)
    return NormResult(value=value, ladder=report)


def norm_inf(
    f: TestFunction,
    nu: float,
    grid: Optional[SupGrid] = None,
    growth: float = 1.5,
) -> NormInfResult:
    """
    Grid maximum of |f| y^nu, a lower bound of the A^infinity_nu norm.

    The function is flagged unbounded when the maximum still grows by more
    than ``growth`` between the grid and the grid shrunk by two octaves, with
    the maximiser on the outer boundary of the grid.
    """
    validate_norm(1.0, nu=nu)
    grid = grid or SupGrid()
    return sup_on_grid(lambda z: np.abs(f.values(z)) * z.imag**nu, grid, f.analytic_sup_norm(nu), growth)


def sup_on_grid(weighted, grid: SupGrid, analytic: Optional[float] = None, growth: float = 1.5) -> NormInfResult:
    """Weighted sup on a polar grid with the unbounded-growth flag"""
    z = grid.points()
    values = np.nan_to_num(np.asarray(weighted(z), dtype=float), nan=0.0)
    flat = int(np.argmax(values))
    top = float(values.flat[flat])
    inner = _inner_mask(grid, z, 2)
    inner_top = float(values[inner].max()) if inner.any() else 0.0
    i_r, i_t = np.unravel_index(flat, values.shape)
    on_edge = i_r in (0, values.shape[0] - 1) or i_t in (0, values.shape[1] - 1)
    unbounded = on_edge and inner_top > 0 and top > growth * inner_top
    gap = None
    if analytic is not None and math.isfinite(analytic) and analytic > 0:
        gap = (analytic - top) / analytic
    if analytic == math.inf:
        unbounded = True
    argmax = z.flat[flat]
    return NormInfResult(
        value=top, unbounded=bool(unbounded), analytic=analytic, relative_gap=gap, argmax=[argmax.real, argmax.imag]
    )


def _inner_mask(grid: SupGrid, z: np.ndarray, by: int) -> np.ndarray:
    lim = grid.base ** (grid.extent_exp - by)
    w = z - grid.center
    r, th = np.abs(w), np.angle(w)
    clear = np.minimum(th, math.pi - th)
    return (r >= 1.0 / lim * (1 - 1e-12)) & (r <= lim * (1 + 1e-12)) & (clear >= 1.0 / lim * (1 - 1e-12))


# ---------------------------------------------------------------------- integral estimates


def lemma3_constant(alpha: float, lambda_exp: float) -> float:
    """Closed form of the integral of y^alpha |w-bar - z|^-lambda over the half-plane for Im w = 1"""
    x_part = math.sqrt(math.pi) * gamma((lambda_exp - 1.0) / 2.0) / gamma(lambda_exp / 2.0)
    return x_part * beta_fn(alpha + 1.0, lambda_exp - alpha - 2.0)


def _weighted_kernel_integral(w: complex, alpha: float, lambda_exp: float, ladder, tol, max_cells, threads):
    wbar = np.conj(w)

    def integrand(z):
        return z.imag**alpha * np.abs(wbar - z) ** (-lambda_exp)

    return ladder_integrate(
        _ladder(ladder).with_center(w.real), integrand, tol=tol, max_cells=max_cells,
        options=ClassifierOptions.from_settings(), threads=threads,
    )


def lemma3_ratio(
    w: complex,
    alpha: float,
    lambda_exp: float,
    ladder: Optional[TruncationLadder] = None,
    tol: Optional[float] = None,
    max_cells: Optional[int] = None,
    threads: int = 1,
) -> float:
    """
    Integral of (Im z)^alpha |w-bar - z|^-lambda_exp divided by (Im w)^(alpha+2-lambda_exp).

    Scale and translation invariance make this a constant in w.
    """
    w = complex(w)
    if not w.imag > 0:
        raise OutOfDomain(w, "upper half-plane")
    if not alpha > -1:
        raise HypothesisViolation("alpha > -1", alpha=alpha)
    if not lambda_exp - 2.0 > alpha:
        raise HypothesisViolation("lambda - 2 > alpha", lambda_exp=lambda_exp, alpha=alpha)
    tol, max_cells = _quad(tol, max_cells)
    report = _weighted_kernel_integral(w, alpha, lambda_exp, ladder, tol, max_cells, threads)
    if not report.convergent:
        raise NotConvergent(0.0, report.verdict.value)
    return report.total / w.imag ** (alpha + 2.0 - lambda_exp)


def kernel_majorant_ratio(
    z: complex,
    t: float,
    beta: float,
    ladder: Optional[TruncationLadder] = None,
    tol: Optional[float] = None,
    max_cells: Optional[int] = None,
) -> float:
    """(Im z)^t times the integral of (Im w)^(beta-t) |w-bar - z|^-(2+beta); constant in z"""
    return lemma3_ratio(z, beta - t, 2.0 + beta, ladder=ladder, tol=tol, max_cells=max_cells)


def pointwise_ratio(
    f: TestFunction,
    p: float,
    nu: float,
    grid: Optional[SupGrid] = None,
    ladder: Optional[TruncationLadder] = None,
    norm: Optional[float] = None,
) -> float:
    """Grid max of |f| y^((nu+2)/p) divided by ||f||_{A^p_nu}"""
    if f.is_zero:
        return 0.0
    norm = norm if norm is not None else _convergent_norm(f, p, nu, ladder)
    grid = grid or SupGrid()
    z = grid.points()
    return float(np.max(np.abs(f.values(z)) * z.imag ** ((nu + 2.0) / p))) / norm


def line_norm_ratio(
    f: TestFunction,
    p: float,
    nu: float,
    y_ladder: Sequence[float] = tuple(2.0**k for k in range(-6, 7)),
    ladder: Optional[TruncationLadder] = None,
    norm: Optional[float] = None,
) -> float:
    """Max over y of (integral of |f(x+iy)|^p dx)^(1/p) y^((nu+1)/p) / ||f||_{A^p_nu}"""
    if f.is_zero:
        return 0.0
    norm = norm if norm is not None else _convergent_norm(f, p, nu, ladder)
    ratios: List[float] = []
    for y in y_ladder:
        value, _ = sp_integrate.quad(lambda x: abs(complex(f.values(complex(x, y)))) ** p, -np.inf, np.inf, limit=200)
        ratios.append(value ** (1.0 / p) * y ** ((nu + 1.0) / p) / norm)
    return max(ratios)


def _convergent_norm(f: TestFunction, p: float, nu: float, ladder) -> float:
    result = norm_p_alpha(f, p, nu, ladder=ladder)
    if not result.ladder.convergent:
        raise NotConvergent(0.0, result.verdict.value)
    return result.value
