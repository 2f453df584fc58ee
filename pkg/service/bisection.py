"""
Bisection on a monotone verdict.

The level-set functionals are antitone in eps, so "Convergent at eps" is an
upward-closed property and the threshold can be bracketed by bisection.
"""

import logging
import math
import sys
from typing import Callable, List, Literal, Optional, Tuple

from tqdm import tqdm

from core.errors import NotConvergent
from core.schemas.report import ConvergenceVerdict, BisectionStep, LadderReport

logger = logging.getLogger(__name__)

Coercion = Literal["divergent", "convergent"]

# eps -> (verdict, ladder, seeds used)
Oracle = Callable[[float], Tuple[ConvergenceVerdict, LadderReport, Optional[List[int]]]]


def coerce(verdict: ConvergenceVerdict, policy: Coercion) -> ConvergenceVerdict:
    if verdict != ConvergenceVerdict.INCONCLUSIVE:
        return verdict
    return ConvergenceVerdict.DIVERGENT if policy == "divergent" else ConvergenceVerdict.CONVERGENT


def bisect_threshold(
    oracle: Oracle,
    hi: float,
    width: float,
    policy: Coercion = "divergent",
    max_expand: int = 3,
) -> Tuple[float, float, List[BisectionStep]]:
    """
    Bracket the smallest eps at which ``oracle`` is Convergent.

    The upper end is tried first and doubled (at most ``max_expand`` times)
    until it is Convergent. Returns (eps_lo, eps_hi, steps in evaluation order).
    """
    steps: List[BisectionStep] = []

    def run(eps: float) -> bool:
        verdict, ladder, seeds = oracle(eps)
        final = coerce(verdict, policy)
        steps.append(BisectionStep(eps=eps, verdict=verdict, coerced=final, ladder=ladder, seeds=seeds))
        logger.info("bisection eps=%.6g: %s%s", eps, verdict.value, "" if final == verdict else f" -> {final.value}")
        return final == ConvergenceVerdict.CONVERGENT

    for _ in range(max_expand + 1):
        if run(hi):
            break
        hi *= 2.0
    else:
        raise NotConvergent(hi / 2.0, steps[-1].verdict.value)

    lo = 0.0
    rounds = max(0, math.ceil(math.log2(hi / width))) if width > 0 else 0
    with tqdm(total=rounds, desc="bisection", disable=not sys.stderr.isatty(), leave=False) as bar:
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            if run(mid):
                hi = mid
            else:
                lo = mid
            bar.update(1)
    return lo, hi, steps
