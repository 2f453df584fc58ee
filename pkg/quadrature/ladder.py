"""
Truncation ladders and the convergence classifier.

An improper integral over the half-plane or the ball is computed on an
increasing family of truncated regions; the sequence of values is then
classified from the ratios of successive increments.
"""

import logging
import math
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.config import get_settings
from core.errors import BudgetExceeded, InsufficientLevels
from core.schemas.report import ConvergenceVerdict, LadderReport
from quadrature.adaptive import adaptive_integrate
from quadrature.regions import (
    disk_core,
    disk_increment,
    disk_level,
    halfplane_increment,
    halfplane_level,
)
from quadrature.summation import RunningSum

logger = logging.getLogger(__name__)

MIN_LEVELS = 5


class ClassifierOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    rho: float = Field(0.75, description="Convergent when the last ratios are at most rho")
    divergence: float = Field(0.9, description="Divergent when the last ratios are at least this")
    tol_tail: float = Field(0.1, description="Admissible tail bound relative to the last value")

    @classmethod
    def from_settings(cls) -> "ClassifierOptions":
        s = get_settings()
        return cls(rho=s.rho, divergence=s.divergence, tol_tail=s.tol_tail)


class TruncationLadder(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: float = Field(2.0, gt=1.0, description="Geometric base")
    min_exp: int = Field(1, description="First level m")
    max_exp: int = Field(12, description="Last level m")
    domain: Literal["halfplane", "ball"] = Field("halfplane", description="Region family")
    center: float = Field(0.0, description="Horizontal centre of half-plane sectors")

    @classmethod
    def from_settings(cls, domain: str = "halfplane", center: float = 0.0) -> "TruncationLadder":
        s = get_settings()
        if domain == "halfplane":
            return cls(base=s.ladder_base, min_exp=s.halfplane_min_exp, max_exp=s.halfplane_max_exp, center=center)
        return cls(base=s.ladder_base, min_exp=s.ball_min_exp, max_exp=s.ball_max_exp, domain="ball")

    def entry_level(self, z) -> np.ndarray:
        """Smallest level m >= min_exp whose region contains z (ball points given by delta)"""
        lb = math.log(self.base)
        if self.domain == "ball":
            m = np.ceil(-np.log(np.asarray(z, dtype=float)) / lb)
        else:
            w = np.asarray(z, dtype=complex) - self.center
            theta = np.angle(w)
            clearance = np.minimum(theta, math.pi - theta)
            with np.errstate(divide="ignore"):
                m = np.ceil(np.maximum(np.abs(np.log(np.abs(w))), -np.log(clearance)) / lb)
        return np.maximum(m, self.min_exp).astype(np.int64)

    def with_center(self, center: float) -> "TruncationLadder":
        return self.model_copy(update={"center": center})

    @property
    def levels(self) -> List[int]:
        return list(range(self.min_exp, self.max_exp + 1))

    def region(self, m: int):
        if self.domain == "halfplane":
            return halfplane_level(m, self.base, self.center)
        return disk_level(m, self.base)

    def increment(self, m: int):
        """Boxes of region m minus region m-1 (the whole region at the first level)"""
        if self.domain == "halfplane":
            if m == self.min_exp:
                return halfplane_level(m, self.base, self.center).boxes()
            return halfplane_increment(m - 1, m, self.base, self.center)
        if m == self.min_exp:
            return disk_core(m, self.base)
        return disk_increment(m - 1, m, self.base)

    def threshold(self, m: int) -> float:
        """base^-m: inner radius / angular clearance (half-plane) or minimum delta (ball)"""
        return self.base ** (-m)


def ratios_of(increments: Sequence[float]) -> List[Optional[float]]:
    out: List[Optional[float]] = []
    for a, b in zip(increments[:-1], increments[1:]):
        if a == 0.0:
            out.append(0.0 if b == 0.0 else math.inf)
        else:
            out.append(b / a)
    return out


def classify(
    values: Sequence[float],
    increments: Optional[Sequence[float]] = None,
    options: ClassifierOptions = ClassifierOptions(),
) -> ConvergenceVerdict:
    """
    Verdict from the last three increment ratios.

    Convergent when all three are <= rho and the geometric tail bound
    d_M rho/(1-rho) is at most tol_tail * Phi_M; Divergent when all three are
    >= the divergence threshold; Inconclusive otherwise.
    """
    if len(values) < MIN_LEVELS:
        raise InsufficientLevels(len(values), MIN_LEVELS)
    if increments is None:
        increments = [b - a for a, b in zip(values[:-1], values[1:])]
    ratios = ratios_of(increments)[-3:]
    d_last = increments[-1]
    if all(r <= options.rho for r in ratios):
        tail = d_last * options.rho / (1.0 - options.rho)
        if tail <= options.tol_tail * values[-1]:
            return ConvergenceVerdict.CONVERGENT
        return ConvergenceVerdict.INCONCLUSIVE
    if all(r >= options.divergence for r in ratios):
        return ConvergenceVerdict.DIVERGENT
    return ConvergenceVerdict.INCONCLUSIVE


def tail_estimate(increments: Sequence[float], options: ClassifierOptions) -> float:
    ratios = [r for r in ratios_of(increments)[-3:] if r is not None]
    if not increments or increments[-1] == 0.0:
        return 0.0
    r = min(max(ratios), options.rho) if ratios else options.rho
    return increments[-1] * r / (1.0 - r)


def build_report(
    levels: Sequence[int],
    values: Sequence[float],
    reliable: Sequence[bool],
    options: ClassifierOptions,
) -> LadderReport:
    """Assemble a report from per-level values; unreliable levels are excluded from the verdict"""
    raw = np.asarray(values, dtype=float)
    flat = np.maximum.accumulate(raw) if raw.size else raw
    # a level lifted to the running maximum no longer carries its own value
    lifted = flat != raw
    if lifted.any():
        logger.warning(
            "ladder values decrease at levels %s; marked unreliable",
            [int(m) for m, up in zip(levels, lifted) if up],
        )
    reliable = [bool(ok) and not up for ok, up in zip(reliable, lifted)]
    values = list(flat)
    increments = [b - a for a, b in zip(values[:-1], values[1:])]
    ratios = ratios_of(increments)
    kept = [v for v, ok in zip(values, reliable) if ok]
    kept_inc = [b - a for a, b in zip(kept[:-1], kept[1:])]
    try:
        verdict = classify(kept, kept_inc, options)
    except InsufficientLevels:
        verdict = ConvergenceVerdict.INCONCLUSIVE
        logger.warning("only %d reliable ladder levels; verdict Inconclusive", len(kept))
    tail = tail_estimate(kept_inc, options) if verdict == ConvergenceVerdict.CONVERGENT else 0.0
    return LadderReport(
        levels=list(levels),
        values=[float(v) for v in values],
        increments=[float(d) for d in increments],
        ratios=ratios,
        reliable=list(reliable),
        verdict=verdict,
        tail_estimate=float(tail),
    )


def ladder_evaluate(
    ladder: TruncationLadder,
    level_value: Callable[[int], float],
    options: ClassifierOptions = ClassifierOptions(),
) -> LadderReport:
    """
    Ladder for functionals whose integrand depends on the level.

    ``level_value(m)`` computes the truncated value at level m from scratch;
    a BudgetExceeded at one level marks it unreliable and keeps its estimate.
    """
    values, reliable = [], []
    for m in ladder.levels:
        try:
            v = float(level_value(m))
            ok = True
        except BudgetExceeded as exc:
            v, ok = float(np.real(exc.estimate)), False
        values.append(v)
        reliable.append(ok)
        logger.debug("level %d: %.12g%s", m, v, "" if ok else " (unreliable)")
    return build_report(ladder.levels, values, reliable, options)


def ladder_integrate(
    ladder: TruncationLadder,
    integrand,
    tol: float = 1e-6,
    max_cells: int = 20000,
    options: ClassifierOptions = ClassifierOptions(),
    threads: int = 1,
) -> LadderReport:
    """Integrate a nonnegative integrand level by level, reusing all inner levels"""
    report, _ = _ladder_components(ladder, integrand, tol, max_cells, options, threads, complex_part=None)
    return report


def ladder_integrate_complex(
    ladder: TruncationLadder,
    integrand,
    tol: float = 1e-6,
    max_cells: int = 20000,
    options: ClassifierOptions = ClassifierOptions(),
    threads: int = 1,
) -> Tuple[LadderReport, complex]:
    """
    Integrate a complex integrand; the verdict comes from the ladder of its modulus.

    Returns (modulus ladder, complex value at the last level).
    """

    def stacked(z):
        g = np.asarray(integrand(z), dtype=complex)
        return np.stack([np.abs(g).astype(complex), g])

    return _ladder_components(ladder, stacked, tol, max_cells, options, threads, complex_part=1)


def _ladder_components(ladder, integrand, tol, max_cells, options, threads, complex_part):
    def level_increment(m):
        try:
            res = adaptive_integrate(ladder.increment(m), integrand, tol=tol, max_cells=max_cells, threads=threads)
            return res.value, True
        except BudgetExceeded as exc:
            logger.warning("level %d exceeded its cell budget", m)
            return exc.estimate, False

    return accumulate_levels(ladder.levels, level_increment, options, complex_part)


def accumulate_levels(
    levels: Sequence[int],
    level_increment: Callable[[int], Tuple[object, bool]],
    options: ClassifierOptions,
    complex_part: Optional[int] = None,
) -> Tuple[LadderReport, complex]:
    """
    Running sums of per-level increments.

    ``level_increment(m)`` returns (components, reliable); component 0 is the
    nonnegative quantity that is classified, ``complex_part`` (if any) a
    complex companion whose total is returned with a proportional tail.
    """
    running = RunningSum()
    running_re, running_im = RunningSum(), RunningSum()
    values, reliable = [], []
    last_mod, last_c = 0.0, 0j
    for m in levels:
        inc, ok = level_increment(m)
        inc = np.atleast_1d(np.asarray(inc))
        last_mod = float(np.real(inc[0]))
        running.add(last_mod)
        if complex_part is not None:
            last_c = complex(inc[complex_part])
            running_re.add(last_c.real)
            running_im.add(last_c.imag)
        values.append(running.value)
        reliable.append(ok)
        logger.debug("level %d: %.12g", m, running.value)
    report = build_report(levels, values, reliable, options)
    value = complex(running_re.value, running_im.value)
    if complex_part is not None and report.convergent and last_mod > 0.0:
        value += last_c * (report.tail_estimate / last_mod)
    return report, value


def linear_fit_r2(values: Sequence[float]) -> Tuple[float, float]:
    """Slope and coefficient of determination of a least-squares line through values"""
    y = np.asarray(values, dtype=float)
    x = np.arange(len(y), dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residual**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2
