"""
Level sets, the distance functional and the constructive decomposition on the half-plane.

The inner integral over the level set V = {|f| y^t >= eps} is discretised on
the Whitney squares whose centres lie in the ladder region; each square
contributes its centre value times the area of its intersection with V.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from catalog.functions import TestFunction
from core.config import get_settings
from core.errors import NotConvergent, OutOfDomain, UnboundedFunction
from core.params import HalfPlaneParams
from core.schemas.report import ConvergenceVerdict, DecompositionReport, DistanceEstimate, LadderReport
from halfplane.bergman import SupGrid, norm_inf, reproduce, reproducing_kernel
from quadrature.adaptive import integrate
from quadrature.ladder import ClassifierOptions, TruncationLadder, build_report, ladder_evaluate, ladder_integrate
from service.bisection import Coercion, bisect_threshold
from whitney.decomposition import levelset_fractions, squares_with_centers_in, subgrid_nodes

logger = logging.getLogger(__name__)

KERNEL_BLOCK = 4_000_000  # point x cell pairs per kernel-sum block


class LevelSet(BaseModel):
    """V = {z : |f(z)| (Im z)^t >= eps}"""

    model_config = ConfigDict(frozen=True)

    f: TestFunction
    eps: float = Field(..., ge=0.0)
    t: float

    def member(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.abs(self.f.values(z)) * z.imag**self.t >= self.eps

    def scaled(self, lam: float) -> "LevelSet":
        """V(lam f, eps) as the level set of f at eps / lam"""
        return LevelSet(f=self.f, eps=self.eps / lam, t=self.t)


def levelset_member(f: TestFunction, eps: float, t: float, z) -> bool:
    z = complex(z)
    if not z.imag > 0:
        raise OutOfDomain(z, "upper half-plane")
    return bool(LevelSet(f=f, eps=eps, t=t).member(np.array([z]))[0])


# ---------------------------------------------------------------------- inner discretisation


@lru_cache(maxsize=4)
def _ladder_squares(ladder: TruncationLadder):
    j, k = squares_with_centers_in(ladder.region(ladder.max_exp))
    s = np.ldexp(1.0, k)
    centers = (j + 0.5) * s + 1j * (1.5 * s)
    levels = ladder.entry_level(centers)
    logger.debug("ladder %s: %d candidate squares", ladder.max_exp, len(j))
    return j, k, centers, levels


@dataclass
class LevelSetCells:
    """Whitney squares meeting a level set, with the area of the intersection"""

    j: np.ndarray
    k: np.ndarray
    centers: np.ndarray
    areas: np.ndarray
    levels: np.ndarray
    fractions: np.ndarray

    def __len__(self) -> int:
        return len(self.j)

    def upto(self, m: int) -> np.ndarray:
        return self.levels <= m


def levelset_cells(levelset: LevelSet, ladder: TruncationLadder) -> LevelSetCells:
    j, k, centers, levels = _ladder_squares(ladder)
    frac = levelset_fractions(levelset.member, j, k)
    active = frac > 0.0
    areas = frac[active] * np.ldexp(1.0, 2 * k[active])
    return LevelSetCells(j[active], k[active], centers[active], areas, levels[active], frac[active])


def kernel_sum(z: np.ndarray, centers: np.ndarray, weights: np.ndarray, power: float) -> np.ndarray:
    """sum_c weights_c |c-bar - z|^-power, blocked over points"""
    z = np.asarray(z, dtype=complex).ravel()
    out = np.zeros(z.shape, dtype=float)
    if len(centers) == 0:
        return out
    cbar = np.conj(centers)
    step = max(1, KERNEL_BLOCK // len(centers))
    for lo in range(0, len(z), step):
        d = np.abs(cbar[None, :] - z[lo : lo + step, None])
        out[lo : lo + step] = (d ** (-power)) @ weights
    return out


def phi_functional(
    f: TestFunction,
    eps: float,
    params: HalfPlaneParams,
    ladder: Optional[TruncationLadder] = None,
    tol: Optional[float] = None,
    max_cells: Optional[int] = None,
    threads: int = 1,
    options: Optional[ClassifierOptions] = None,
) -> LadderReport:
    """
    Ladder of the truncated double integral

        int_{R_m} ( int_{V ∩ R_m} (Im w)^(beta-t) |w-bar - z|^-(beta+2) dw )^q (Im z)^nu dz.
    """
    settings = get_settings()
    ladder = ladder or TruncationLadder.from_settings("halfplane")
    options = options or ClassifierOptions.from_settings()
    tol = tol if tol is not None else settings.quad_tol
    max_cells = max_cells if max_cells is not None else settings.max_cells

    cells = levelset_cells(LevelSet(f=f, eps=eps, t=params.t), ladder)
    if len(cells) == 0:
        logger.debug("eps=%g: empty level set", eps)
        zeros = [0.0] * len(ladder.levels)
        return build_report(ladder.levels, zeros, [True] * len(zeros), options)

    weights = cells.centers.imag ** (params.beta - params.t) * cells.areas
    power = params.beta + 2.0

    def level_value(m: int) -> float:
        sel = cells.upto(m)
        if not sel.any():
            return 0.0
        c, wts = cells.centers[sel], weights[sel]

        def integrand(z):
            return kernel_sum(z, c, wts, power) ** params.q * z.imag**params.nu

        return integrate(ladder.region(m), integrand, tol=tol, max_cells=max_cells, threads=threads)

    report = ladder_evaluate(ladder, level_value, options)
    logger.info("phi eps=%.6g: %s over %d squares", eps, report.verdict.value, len(cells))
    return report


# ---------------------------------------------------------------------- distance estimate


def estimate_l2(
    f: TestFunction,
    params: HalfPlaneParams,
    ladder: Optional[TruncationLadder] = None,
    eps_tol: float = 2.0**-7,
    margin: float = 0.05,
    coerce_inconclusive: Coercion = "divergent",
    grid: Optional[SupGrid] = None,
    tol: Optional[float] = None,
    max_cells: Optional[int] = None,
    threads: int = 1,
) -> DistanceEstimate:
    """
    Bracket the distance from f to A^q_nu in the A^infinity_t norm.

    Bisection over [0, (1+margin) ||f||_inf] with bracket width eps_tol * ||f||_inf.
    """
    sup = norm_inf(f, params.t, grid)
    if sup.unbounded:
        raise UnboundedFunction(f"{f.label} is not in A^infinity_{params.t:g}", sup=sup.value)
    policy = {"inconclusive": coerce_inconclusive, "margin": margin, "eps_tol": eps_tol}
    if sup.value == 0.0:
        return DistanceEstimate(eps_lo=0.0, eps_hi=0.0, norm_inf=0.0, policy=policy)

    def oracle(eps: float):
        report = phi_functional(f, eps, params, ladder, tol=tol, max_cells=max_cells, threads=threads)
        return report.verdict, report, None

    lo, hi, steps = bisect_threshold(oracle, (1.0 + margin) * sup.value, eps_tol * sup.value, coerce_inconclusive)
    return DistanceEstimate(eps_lo=lo, eps_hi=hi, norm_inf=sup.value, steps=steps, policy=policy)


# ---------------------------------------------------------------------- decomposition


@dataclass
class HalfPlaneDecomposition:
    """
    f = f1 + f2 with f2 the representation integral restricted to the level set.

    f2 is a finite sum over the in-set subgrid nodes; f1 is the reproduced
    value minus f2, cached per point.
    """

    f: TestFunction
    eps: float
    params: HalfPlaneParams
    ladder: TruncationLadder
    nodes: np.ndarray
    node_weights: np.ndarray
    square_centers: np.ndarray
    square_moments: np.ndarray
    tol: Optional[float] = None
    _reproduced: Dict[complex, complex] = field(default_factory=dict, repr=False)

    @property
    def beta(self) -> float:
        return self.params.beta

    def _kernel_apply(self, z, points: np.ndarray, weights: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        if len(points):
            step = max(1, KERNEL_BLOCK // len(points))
            for lo in range(0, len(flat), step):
                k = reproducing_kernel(flat[lo : lo + step, None], points[None, :], self.beta)
                out[lo : lo + step] = k @ weights
        return out.reshape(z.shape)

    def f2(self, z) -> np.ndarray:
        return self._kernel_apply(z, self.nodes, self.node_weights)

    def f2_collapsed(self, z) -> np.ndarray:
        """f2 with each square's contribution moved to the square centre"""
        return self._kernel_apply(z, self.square_centers, self.square_moments)

    def reproduced(self, z: complex) -> complex:
        z = complex(z)
        if z not in self._reproduced:
            self._reproduced[z] = reproduce(self.f, z, self.beta, self.ladder, tol=self.tol)
        return self._reproduced[z]

    def f1(self, z: complex) -> complex:
        z = complex(z)
        return self.reproduced(z) - complex(self.f2(np.array([z]))[0])


def decompose(
    f: TestFunction,
    eps: float,
    params: HalfPlaneParams,
    ladder: Optional[TruncationLadder] = None,
    tol: Optional[float] = None,
    check_phi: bool = True,
    max_cells: Optional[int] = None,
) -> HalfPlaneDecomposition:
    """Split f at level eps; requires the functional at eps to be Convergent"""
    ladder = ladder or TruncationLadder.from_settings("halfplane")
    if check_phi:
        report = phi_functional(f, eps, params, ladder, tol=tol, max_cells=max_cells)
        if report.verdict != ConvergenceVerdict.CONVERGENT:
            raise NotConvergent(eps, report.verdict.value)

    levelset = LevelSet(f=f, eps=eps, t=params.t)
    cells = levelset_cells(levelset, ladder)
    nodes, weights, centers, moments = [], [], [], []
    for full, n in ((True, 8), (False, 32)):
        sel = (cells.fractions == 1.0) if full else (cells.fractions < 1.0)
        if not sel.any():
            continue
        pts, area = subgrid_nodes(cells.j[sel], cells.k[sel], n)
        inside = levelset.member(pts.ravel()).reshape(pts.shape)
        contrib = np.where(inside, f.values(pts) * pts.imag**params.beta, 0.0) * area[:, None]
        nodes.append(pts[inside])
        weights.append(contrib[inside])
        centers.append(cells.centers[sel])
        moments.append(contrib.sum(axis=1))
    logger.info("decompose eps=%.6g: %d squares, %d nodes", eps, len(cells), sum(len(p) for p in nodes))
    return HalfPlaneDecomposition(
        f=f,
        eps=eps,
        params=params,
        ladder=ladder,
        nodes=_concat(nodes),
        node_weights=_concat(weights),
        square_centers=_concat(centers),
        square_moments=_concat(moments),
        tol=tol,
    )


def _concat(parts) -> np.ndarray:
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def default_samples() -> List[complex]:
    """Twenty fixed points spread over scales and directions"""
    radii = (0.25, 0.5, 1.0, 2.0, 4.0)
    angles = (math.pi / 6, math.pi / 3, 2 * math.pi / 3, 5 * math.pi / 6)
    return [r * complex(math.cos(a), math.sin(a)) for r in radii for a in angles]


def candidate_gap(f: TestFunction, g: Callable[[np.ndarray], np.ndarray], weight: float, grid: Optional[SupGrid] = None) -> float:
    """Grid sup of |f - g| (Im z)^weight"""
    grid = grid or SupGrid()
    z = grid.points()
    return float(np.max(np.abs(f.values(z) - g(z)) * z.imag**weight))


def check_decomposition(
    f: TestFunction,
    eps: float,
    params: HalfPlaneParams,
    ladder: Optional[TruncationLadder] = None,
    samples: Optional[Sequence[complex]] = None,
    grid: Optional[SupGrid] = None,
    tol: Optional[float] = None,
    check_phi: bool = True,
) -> DecompositionReport:
    """
    Measure the two halves of the split.

    The sup of |f1| y^t is taken on the sup grid through f1 = f - f2; the
    reproduction residual max |f1 + f2 - f| is measured at the sample points
    with f1 from the representation integral.
    """
    ladder = ladder or TruncationLadder.from_settings("halfplane")
    dec = decompose(f, eps, params, ladder, tol=tol, check_phi=check_phi)
    samples = list(samples) if samples is not None else default_samples()

    f1_sup = candidate_gap(f, dec.f2, params.t, grid or SupGrid(per_octave=4, angular=61))

    residual = 0.0
    if not f.is_zero:
        for z in samples:
            total = dec.f1(z) + complex(dec.f2(np.array([z]))[0])
            residual = max(residual, abs(total - complex(f.values(z))))

    def f2_power(z):
        return np.abs(dec.f2_collapsed(z)) ** params.q * z.imag**params.nu

    settings = get_settings()
    if len(dec.square_centers):
        f2_ladder = ladder_integrate(
            ladder, f2_power, tol=tol or settings.quad_tol, max_cells=settings.max_cells,
            options=ClassifierOptions.from_settings(),
        )
        f2_norm = f2_ladder.total ** (1.0 / params.q) if f2_ladder.convergent else math.inf
        f2_verdict = f2_ladder.verdict
    else:
        f2_norm, f2_verdict = 0.0, ConvergenceVerdict.CONVERGENT

    return DecompositionReport(
        eps=eps,
        f1_sup_over_eps=f1_sup / eps if eps > 0 else math.inf,
        f1_sup=f1_sup,
        f2_norm=f2_norm,
        f2_verdict=f2_verdict,
        residual=residual,
        cells=len(dec.square_centers),
        sample_points=len(samples),
    )
