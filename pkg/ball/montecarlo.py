"""
Stratified sampling of the unit ball of C^2 over dyadic delta-shells.

Shell m is {base^-m <= delta < base^-(m-1)} (the first ladder level is the
whole core delta >= base^-min_exp). In the chart tau = -log(delta) the
volume element is (1 - e^-tau) e^-tau / 2 dtau dsigma, with |S^3| = 2 pi^2.
Each shell draws a scrambled Sobol set in (tau, Hopf coordinates) from its
own generator, seeded by (seed, shell), so shells are independent of
evaluation order.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from core.schemas.report import LadderReport
from quadrature.ladder import ClassifierOptions, TruncationLadder, accumulate_levels
from quadrature.summation import compensated_sum_rows

logger = logging.getLogger(__name__)

SPHERE_AREA = 2.0 * math.pi**2
DEFAULT_SAMPLES = 2048
BOUNDARY_FACTOR = 4


def shell_bounds(ladder: TruncationLadder, m: int) -> Tuple[float, float]:
    lb = math.log(ladder.base)
    lo = 0.0 if m == ladder.min_exp else (m - 1) * lb
    return lo, m * lb


def shell_size(ladder: TruncationLadder, m: int, samples: int) -> int:
    """Samples in shell m: a power of two, four times denser in the outer half of the ladder"""
    count = samples * (BOUNDARY_FACTOR if 2 * m > ladder.min_exp + ladder.max_exp else 1)
    return 1 << max(0, int(math.ceil(math.log2(count))))


@lru_cache(maxsize=64)
def shell_nodes(ladder: TruncationLadder, m: int, samples: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Points (count, 2) and volume weights of shell m.

    The weights sum to the shell volume up to the sampling error.
    """
    count = shell_size(ladder, m, samples)
    rng = np.random.default_rng([seed, m])
    u = qmc.Sobol(d=4, scramble=True, seed=rng).random_base2(int(math.log2(count)))
    tau0, tau1 = shell_bounds(ladder, m)
    tau = tau0 + (tau1 - tau0) * u[:, 0]
    r = np.sqrt(-np.expm1(-tau))
    a = u[:, 1]
    z1 = r * np.sqrt(a) * np.exp(2j * math.pi * u[:, 2])
    z2 = r * np.sqrt(1.0 - a) * np.exp(2j * math.pi * u[:, 3])
    density = -np.expm1(-tau) * np.exp(-tau) / 2.0
    weights = SPHERE_AREA * (tau1 - tau0) * density / count
    return np.stack([z1, z2], axis=-1), weights


def ladder_nodes(
    ladder: TruncationLadder, samples: int, seed: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All shell nodes with their weights and the ladder level each belongs to"""
    pts, wts, lev = [], [], []
    for m in ladder.levels:
        p, w = shell_nodes(ladder, m, samples, seed)
        pts.append(p)
        wts.append(w)
        lev.append(np.full(len(w), m, dtype=np.int64))
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(lev)


def mc_ladder_integrate(
    ladder: TruncationLadder,
    integrand: Callable[[np.ndarray], np.ndarray],
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    options: Optional[ClassifierOptions] = None,
    complex_values: bool = False,
) -> Tuple[LadderReport, complex]:
    """
    Shell ladder of a ball integral in C^2.

    For complex integrands the verdict is taken on the modulus and the
    complex total is returned alongside.
    """
    options = options or ClassifierOptions.from_settings()

    def level_increment(m: int):
        pts, w = shell_nodes(ladder, m, samples, seed)
        g = np.asarray(integrand(pts), dtype=complex if complex_values else float)
        if complex_values:
            rows = np.stack([np.abs(g) * w, (g * w).real, (g * w).imag], axis=1)
            mod, re, im = compensated_sum_rows(rows)
            return np.array([mod, complex(re, im)]), True
        return compensated_sum_rows((g * w)[:, None])[0], True

    return accumulate_levels(ladder.levels, level_increment, options, 1 if complex_values else None)


def seeds_for(seed: int, count: int = 3) -> List[int]:
    """Independent seeds derived from a run seed"""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]
