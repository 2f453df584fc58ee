"""
Level sets, the distance functional and the decomposition on the unit ball.

On the disk the inner integral over Omega = {|f| delta^s >= eps} runs over
polar cells of the shell ladder (one radial cell per shell, 2^(m+2) angular
cells in shell m), with the area of each cell's intersection with Omega
measured on a subgrid. In C^2 the shells are sampled and the in-set samples
carry their volume weights.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ball.geometry import (
    BallIntegration,
    BallSupGrid,
    _delta,
    integrate_ball,
    norm_inf_ball,
    normalizing_constant,
    reproduce_ball,
    sqnorm,
)
from ball.montecarlo import ladder_nodes, seeds_for
from catalog.functions import TestFunction
from core.errors import NotConvergent, OutOfDomain, UnboundedFunction
from core.params import BallParams
from core.schemas.report import (
    ChainCheck,
    ContradictionChainReport,
    ConvergenceVerdict,
    DecompositionReport,
    DistanceEstimate,
    LadderReport,
)
from quadrature.adaptive import integrate
from quadrature.ladder import ClassifierOptions, TruncationLadder, build_report, ladder_evaluate
from quadrature.regions import chart_map
from quadrature.summation import compensated_sum_rows
from service.bisection import Coercion, bisect_threshold

logger = logging.getLogger(__name__)

KERNEL_BLOCK = 4_000_000
NODE_CHUNK = 2_000_000
PSI_SAMPLES = 512


class BallLevelSet(BaseModel):
    """Omega = {z : |f(z)| delta(z)^s >= eps}"""

    model_config = ConfigDict(frozen=True)

    f: TestFunction
    eps: float = Field(..., ge=0.0)
    s: float
    n: int = 1

    def member(self, z) -> np.ndarray:
        return np.abs(self.f.values(z)) * _delta(z, self.n) ** self.s >= self.eps

    def scaled(self, lam: float) -> "BallLevelSet":
        return BallLevelSet(f=self.f, eps=self.eps / lam, s=self.s, n=self.n)


def omega_member(f: TestFunction, eps: float, s: float, z, n: int = 1) -> bool:
    if float(sqnorm(z, n)) >= 1.0:
        raise OutOfDomain(np.asarray(z).tolist(), f"unit ball of C^{n}")
    pts = np.asarray(z, dtype=complex)[None, ...]
    return bool(BallLevelSet(f=f, eps=eps, s=s, n=n).member(pts)[0])


# ---------------------------------------------------------------------- inner discretisation


def angular_cells(ladder: TruncationLadder, m: int) -> int:
    return max(8, 4 * int(round(ladder.base**m)))


@lru_cache(maxsize=4)
def _disk_cells(ladder: TruncationLadder) -> np.ndarray:
    """Rows (tau0, tau1, theta0, theta1, level) of the polar cells of every shell"""
    lb = math.log(ladder.base)
    rows = []
    for m in ladder.levels:
        tau0 = 0.0 if m == ladder.min_exp else (m - 1) * lb
        count = angular_cells(ladder, m)
        th = 2.0 * math.pi * np.arange(count + 1) / count
        block = np.empty((count, 5))
        block[:, 0], block[:, 1] = tau0, m * lb
        block[:, 2], block[:, 3] = th[:-1], th[1:]
        block[:, 4] = m
        rows.append(block)
    return np.concatenate(rows)


def _cell_nodes(cells: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Midpoint subgrid nodes of polar cells and their disk-area weights"""
    offs = (np.arange(n) + 0.5) / n
    ou, ov = np.meshgrid(offs, offs, indexing="ij")
    du = cells[:, 1] - cells[:, 0]
    dv = cells[:, 3] - cells[:, 2]
    u = cells[:, 0:1] + du[:, None] * ou.ravel()[None, :]
    v = cells[:, 2:3] + dv[:, None] * ov.ravel()[None, :]
    z, jac = chart_map("disk_shell", u, v)
    return z, jac * (du * dv)[:, None] / (n * n)


@dataclass
class BallCells:
    """Discretisation cells meeting a level set; ``areas`` are volumes inside the set"""

    centers: np.ndarray
    areas: np.ndarray
    levels: np.ndarray
    bounds: Optional[np.ndarray] = None
    full: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.areas)

    def upto(self, m: int) -> np.ndarray:
        return self.levels <= m


def disk_levelset_cells(levelset: BallLevelSet, ladder: TruncationLadder, coarse: int = 8, fine: int = 32) -> BallCells:
    cells = _disk_cells(ladder)
    areas = np.zeros(len(cells))
    counts = np.zeros(len(cells), dtype=np.int64)
    step = max(1, NODE_CHUNK // (coarse * coarse))
    for lo in range(0, len(cells), step):
        z, w = _cell_nodes(cells[lo : lo + step], coarse)
        inside = levelset.member(z.ravel()).reshape(z.shape)
        areas[lo : lo + step] = np.where(inside, w, 0.0).sum(axis=1)
        counts[lo : lo + step] = inside.sum(axis=1)
    mixed = (counts > 0) & (counts < coarse * coarse)
    if mixed.any():
        idx = np.flatnonzero(mixed)
        step = max(1, NODE_CHUNK // (fine * fine))
        for lo in range(0, len(idx), step):
            sel = idx[lo : lo + step]
            z, w = _cell_nodes(cells[sel], fine)
            inside = levelset.member(z.ravel()).reshape(z.shape)
            areas[sel] = np.where(inside, w, 0.0).sum(axis=1)
    active = areas > 0.0
    mid = cells[active]
    centers, _ = chart_map("disk_shell", 0.5 * (mid[:, 0] + mid[:, 1]), 0.5 * (mid[:, 2] + mid[:, 3]))
    logger.debug("disk level set: %d of %d cells active, %d refined", int(active.sum()), len(cells), int(mixed.sum()))
    return BallCells(
        centers=centers,
        areas=areas[active],
        levels=mid[:, 4].astype(np.int64),
        bounds=mid[:, :4],
        full=~mixed[active],
    )


def sampled_levelset_cells(levelset: BallLevelSet, ladder: TruncationLadder, samples: int, seed: int) -> BallCells:
    pts, wts, lev = ladder_nodes(ladder, samples, seed)
    inside = levelset.member(pts)
    return BallCells(centers=pts[inside], areas=wts[inside], levels=lev[inside])


def levelset_cells_ball(
    levelset: BallLevelSet, ladder: TruncationLadder, samples: int = PSI_SAMPLES, seed: int = 0
) -> BallCells:
    if levelset.n == 1:
        return disk_levelset_cells(levelset, ladder)
    return sampled_levelset_cells(levelset, ladder, samples, seed)


def ball_kernel_sum(z, centers, weights, power: float, n: int) -> np.ndarray:
    """sum_c weights_c |1 - <z, c>|^-power, blocked over points"""
    z = np.asarray(z, dtype=complex)
    shape = z.shape[:-1] if n == 2 else z.shape
    flat = z.reshape(-1, n) if n == 2 else z.ravel()
    out = np.zeros(len(flat))
    if len(weights) == 0:
        return out.reshape(shape)
    step = max(1, KERNEL_BLOCK // len(weights))
    for lo in range(0, len(flat), step):
        block = flat[lo : lo + step]
        if n == 1:
            d = np.abs(1.0 - block[:, None] * np.conj(centers)[None, :])
        else:
            d = np.abs(1.0 - block @ np.conj(centers).T)
        out[lo : lo + step] = (d ** (-power)) @ weights
    return out.reshape(shape)


# ---------------------------------------------------------------------- functional


def _inner_weights(cells: BallCells, params: BallParams) -> np.ndarray:
    c = normalizing_constant(params.n, params.t)
    return c * _delta(cells.centers, params.n) ** (params.t - params.s) * cells.areas


def psi_functional(
    f: TestFunction,
    eps: float,
    params: BallParams,
    setup: Optional[BallIntegration] = None,
    samples: int = PSI_SAMPLES,
    options: Optional[ClassifierOptions] = None,
) -> LadderReport:
    """
    Ladder of the shell-truncated double integral

        int ( int_Omega |K(z, xi)| delta^(t-s)(xi) dV(xi) )^q delta^(sq-n-1)(z) dV(z).

    In C^2 the verdict is statistical: Convergent or Divergent only when three
    seeds agree, Inconclusive otherwise.
    """
    return psi_classify(f, eps, params, setup, samples, options)[1]


def psi_classify(
    f: TestFunction,
    eps: float,
    params: BallParams,
    setup: Optional[BallIntegration] = None,
    samples: int = PSI_SAMPLES,
    options: Optional[ClassifierOptions] = None,
) -> Tuple[ConvergenceVerdict, LadderReport, Optional[List[int]]]:
    setup = setup or BallIntegration()
    options = options or ClassifierOptions.from_settings()
    levelset = BallLevelSet(f=f, eps=eps, s=params.s, n=params.n)
    if params.n == 1:
        report = _psi_disk(levelset, params, setup, options)
        logger.info("psi eps=%.6g: %s", eps, report.verdict.value)
        return report.verdict, report, None

    seeds = seeds_for(setup.seed)
    reports = [_psi_sampled(levelset, params, setup.ladder, samples, seed, options) for seed in seeds]
    verdicts = {r.verdict for r in reports}
    combined = verdicts.pop() if len(verdicts) == 1 else ConvergenceVerdict.INCONCLUSIVE
    report = reports[0].model_copy(update={"verdict": combined})
    logger.info("psi eps=%.6g (statistical, seeds %s): %s", eps, seeds, combined.value)
    return combined, report, seeds


def _psi_disk(levelset: BallLevelSet, params: BallParams, setup: BallIntegration, options) -> LadderReport:
    ladder = setup.ladder
    cells = disk_levelset_cells(levelset, ladder)
    if len(cells) == 0:
        zeros = [0.0] * len(ladder.levels)
        return build_report(ladder.levels, zeros, [True] * len(zeros), options)
    weights = _inner_weights(cells, params)
    power = params.n + 1.0 + params.t
    outer = params.outer_exponent

    def level_value(m: int) -> float:
        sel = cells.upto(m)
        if not sel.any():
            return 0.0
        c, w = cells.centers[sel], weights[sel]

        def integrand(z):
            return ball_kernel_sum(z, c, w, power, 1) ** params.q * _delta(z, 1) ** outer

        return integrate(ladder.region(m), integrand, tol=setup.tol, max_cells=setup.max_cells, threads=setup.threads)

    return ladder_evaluate(ladder, level_value, options)


def _psi_sampled(levelset: BallLevelSet, params: BallParams, ladder: TruncationLadder, samples: int, seed: int, options):
    cells = sampled_levelset_cells(levelset, ladder, samples, seed)
    if len(cells) == 0:
        zeros = [0.0] * len(ladder.levels)
        return build_report(ladder.levels, zeros, [True] * len(zeros), options)
    weights = _inner_weights(cells, params)
    power = params.n + 1.0 + params.t
    levels = ladder.levels

    outer_pts, outer_w, outer_lev = ladder_nodes(ladder, samples, seed ^ 0x5A5A5A5A)
    outer_w = outer_w * _delta(outer_pts, 2) ** params.outer_exponent

    # per-level partial inner sums, accumulated over levels
    partial = np.zeros((len(outer_w), len(levels)))
    for i, m in enumerate(levels):
        sel = cells.levels == m
        if sel.any():
            partial[:, i] = ball_kernel_sum(outer_pts, cells.centers[sel], weights[sel], power, 2)
    inner_sums = np.cumsum(partial, axis=1)

    values = []
    for i, m in enumerate(levels):
        terms = np.where(outer_lev <= m, outer_w * inner_sums[:, i] ** params.q, 0.0)
        values.append(float(compensated_sum_rows(terms[:, None])[0]))
    return build_report(levels, values, [True] * len(values), options)


# ---------------------------------------------------------------------- distance estimate


def estimate_omega2(
    f: TestFunction,
    params: BallParams,
    setup: Optional[BallIntegration] = None,
    eps_tol: float = 2.0**-7,
    margin: float = 0.05,
    coerce_inconclusive: Coercion = "divergent",
    grid: Optional[BallSupGrid] = None,
    samples: int = PSI_SAMPLES,
) -> DistanceEstimate:
    """Bracket the distance from f to A^q_s in the A^infinity_s norm of the ball"""
    sup = norm_inf_ball(f, params.s, params.n, grid)
    if sup.unbounded:
        raise UnboundedFunction(f"{f.label} is not in A^infinity_{params.s:g} of the ball", sup=sup.value)
    policy = {"inconclusive": coerce_inconclusive, "margin": margin, "eps_tol": eps_tol}
    if params.n == 2:
        policy["statistical"] = True
    if sup.value == 0.0:
        return DistanceEstimate(eps_lo=0.0, eps_hi=0.0, norm_inf=0.0, policy=policy, domain="ball", n=params.n)

    def oracle(eps: float):
        return psi_classify(f, eps, params, setup, samples)

    lo, hi, steps = bisect_threshold(oracle, (1.0 + margin) * sup.value, eps_tol * sup.value, coerce_inconclusive)
    return DistanceEstimate(
        eps_lo=lo, eps_hi=hi, norm_inf=sup.value, steps=steps, policy=policy, domain="ball", n=params.n
    )


# ---------------------------------------------------------------------- decomposition


@dataclass
class BallDecomposition:
    """f = f1 + f2 with f2 the reproducing integral over the level set"""

    f: TestFunction
    eps: float
    params: BallParams
    setup: BallIntegration
    nodes: np.ndarray
    node_weights: np.ndarray
    cell_centers: np.ndarray
    cell_moments: np.ndarray
    _reproduced: Dict[Tuple, complex] = field(default_factory=dict, repr=False)

    def _sum(self, z, points, weights) -> np.ndarray:
        n, t = self.params.n, self.params.t
        z = np.asarray(z, dtype=complex)
        shape = z.shape[:-1] if n == 2 else z.shape
        flat = z.reshape(-1, n) if n == 2 else z.ravel()
        out = np.zeros(len(flat), dtype=complex)
        if len(weights):
            step = max(1, KERNEL_BLOCK // len(weights))
            for lo in range(0, len(flat), step):
                block = flat[lo : lo + step]
                prod = block[:, None] * np.conj(points)[None, :] if n == 1 else block @ np.conj(points).T
                out[lo : lo + step] = np.exp(-(n + 1.0 + t) * np.log(1.0 - prod)) @ weights
        return (normalizing_constant(n, t) * out).reshape(shape)

    def f2(self, z) -> np.ndarray:
        return self._sum(z, self.nodes, self.node_weights)

    def f2_collapsed(self, z) -> np.ndarray:
        return self._sum(z, self.cell_centers, self.cell_moments)

    def reproduced(self, z) -> complex:
        key = tuple(np.atleast_1d(np.asarray(z, dtype=complex)).tolist())
        if key not in self._reproduced:
            self._reproduced[key] = reproduce_ball(self.f, z, self.params.t, self.params.n, self.setup)
        return self._reproduced[key]

    def f1(self, z) -> complex:
        single = np.asarray(z, dtype=complex)[None, ...]
        return self.reproduced(z) - complex(self.f2(single)[0])


def decompose_ball(
    f: TestFunction,
    eps: float,
    params: BallParams,
    setup: Optional[BallIntegration] = None,
    check_psi: bool = True,
    samples: int = PSI_SAMPLES,
) -> BallDecomposition:
    """Split f at level eps; requires the ball functional at eps to be Convergent"""
    setup = setup or BallIntegration()
    if check_psi:
        verdict, _, _ = psi_classify(f, eps, params, setup, samples)
        if verdict != ConvergenceVerdict.CONVERGENT:
            raise NotConvergent(eps, verdict.value)

    n, t = params.n, params.t
    levelset = BallLevelSet(f=f, eps=eps, s=params.s, n=n)
    cells = levelset_cells_ball(levelset, setup.ladder, samples, setup.seed)
    if n == 2:
        pts = cells.centers
        w = f.values(pts) * _delta(pts, 2) ** t * cells.areas
        return BallDecomposition(f, eps, params, setup, pts, w, pts, w)

    nodes, weights, moments = [], [], []
    for full, size in ((True, 8), (False, 32)):
        sel = cells.full == full
        if not sel.any():
            continue
        z, w = _cell_nodes(cells.bounds[sel], size)
        inside = levelset.member(z.ravel()).reshape(z.shape)
        contrib = np.where(inside, f.values(z) * _delta(z, 1) ** t * w, 0.0)
        nodes.append(z[inside])
        weights.append(contrib[inside])
        moments.append((cells.centers[sel], contrib.sum(axis=1)))
    node_arr = np.concatenate(nodes) if nodes else np.zeros(0, dtype=complex)
    weight_arr = np.concatenate(weights) if weights else np.zeros(0, dtype=complex)
    centers = np.concatenate([c for c, _ in moments]) if moments else np.zeros(0, dtype=complex)
    cell_w = np.concatenate([m for _, m in moments]) if moments else np.zeros(0, dtype=complex)
    logger.info("decompose_ball eps=%.6g: %d cells, %d nodes", eps, len(cells), len(node_arr))
    return BallDecomposition(f, eps, params, setup, node_arr, weight_arr, centers, cell_w)


def default_ball_samples(n: int = 1, count: int = 10, radius: float = 0.9) -> List[np.ndarray]:
    """Fixed interior points on a spiral with |z| up to ``radius``"""
    out = []
    for i in range(count):
        r = radius * (i + 1) / count
        angle = 2.39996 * i
        if n == 1:
            out.append(np.asarray(r * complex(math.cos(angle), math.sin(angle))))
        else:
            out.append(np.array([r * math.cos(angle) * np.exp(1j * angle), r * math.sin(angle)], dtype=complex))
    return out


def candidate_gap_ball(
    f: TestFunction, g: Callable[[np.ndarray], np.ndarray], s: float, n: int = 1, grid: Optional[BallSupGrid] = None
) -> float:
    """Grid sup of |f - g| delta^s"""
    grid = grid or BallSupGrid(per_octave=4, angular=64, split=5)
    z = grid.points(n)
    return float(np.max(np.abs(f.values(z) - g(z)) * _delta(z, n) ** s))


def _f2_norm(dec: BallDecomposition, params: BallParams) -> Tuple[float, ConvergenceVerdict]:
    if len(dec.cell_moments) == 0:
        return 0.0, ConvergenceVerdict.CONVERGENT
    outer = params.outer_exponent

    def integrand(z):
        return np.abs(dec.f2_collapsed(z)) ** params.q * _delta(z, params.n) ** outer

    report, _ = integrate_ball(params.n, integrand, dec.setup)
    value = report.total ** (1.0 / params.q) if report.convergent else math.inf
    return value, report.verdict


def check_decomposition_ball(
    f: TestFunction,
    eps: float,
    params: BallParams,
    setup: Optional[BallIntegration] = None,
    samples: Optional[Sequence] = None,
    grid: Optional[BallSupGrid] = None,
    check_psi: bool = True,
) -> DecompositionReport:
    """
    Measure the two halves of the ball split.

    The sup of |f1| delta^s is taken on the grid through f1 = f - f2; the
    residual uses f1 from the reproducing integral at the sample points.
    """
    dec = decompose_ball(f, eps, params, setup, check_psi=check_psi)
    samples = list(samples) if samples is not None else default_ball_samples(params.n)
    f1_sup = candidate_gap_ball(f, dec.f2, params.s, params.n, grid)
    residual = 0.0
    if not f.is_zero:
        for z in samples:
            single = np.asarray(z, dtype=complex)[None, ...]
            total = dec.f1(z) + complex(dec.f2(single)[0])
            residual = max(residual, abs(total - complex(f.values(single)[0])))
    f2_norm, f2_verdict = _f2_norm(dec, params)
    return DecompositionReport(
        eps=eps,
        f1_sup_over_eps=f1_sup / eps if eps > 0 else math.inf,
        f1_sup=f1_sup,
        f2_norm=f2_norm,
        f2_verdict=f2_verdict,
        residual=residual,
        cells=len(dec.cell_moments),
        sample_points=len(samples),
    )


def check_contradiction_chain(
    f: TestFunction,
    eps: float,
    params: BallParams,
    setup: Optional[BallIntegration] = None,
    factors: Sequence[float] = (1.1, 1.5, 2.0),
    grid: Optional[BallSupGrid] = None,
) -> ContradictionChainReport:
    """
    Take f2 of the split at eps as a candidate g, measure eps1 = ||f - g||, and
    check that a Convergent ||g||_{A^q_s} comes with Convergent functionals at
    every eps' = factor * eps1.
    """
    dec = decompose_ball(f, eps, params, setup, check_psi=False)
    gap = candidate_gap_ball(f, dec.f2, params.s, params.n, grid)
    norm, verdict = _f2_norm(dec, params)
    checks: List[ChainCheck] = []
    for factor in factors:
        level = factor * gap
        if level <= 0:
            continue
        checks.append(ChainCheck(eps=level, verdict=psi_classify(f, level, params, dec.setup)[0]))
    holds = verdict != ConvergenceVerdict.CONVERGENT or all(
        p.verdict == ConvergenceVerdict.CONVERGENT for p in checks
    )
    return ContradictionChainReport(
        eps=eps, candidate_gap=gap, candidate_norm=norm, candidate_verdict=verdict, checks=checks, holds=holds
    )
