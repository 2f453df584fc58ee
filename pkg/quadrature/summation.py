"""
Compensated summation.

Every reduction in the engine goes through these helpers so results do not
depend on how cell evaluations were scheduled. Batch sums use math.fsum,
which is exactly rounded and therefore independent of order; running sums
(ladder levels, Monte Carlo shells) use a Neumaier step in index order.
"""

import math
from typing import Iterable, Tuple

import numpy as np


def kahan_add(total: float, carry: float, term: float) -> Tuple[float, float]:
    """
    One Neumaier-compensated addition step.

    Returns (new_total, new_carry); the running sum is total + carry.
    """
    t = total + term
    if abs(total) >= abs(term):
        carry += (total - t) + term
    else:
        carry += (term - t) + total
    return t, carry


class RunningSum:
    """Streaming compensated accumulator"""

    def __init__(self) -> None:
        self.total = 0.0
        self.carry = 0.0

    def add(self, term: float) -> float:
        self.total, self.carry = kahan_add(self.total, self.carry, float(term))
        return self.value

    @property
    def value(self) -> float:
        return self.total + self.carry


def compensated_sum(values: Iterable[float]) -> float:
    return math.fsum(float(v) for v in values)


def compensated_sum_rows(rows: np.ndarray) -> np.ndarray:
    """
    Column-wise exactly rounded sum of a 2-D array (rows are summands).

    Complex parts are summed separately.
    """
    rows = np.asarray(rows)
    if rows.ndim == 1:
        rows = rows[:, None]
    if np.iscomplexobj(rows):
        return compensated_sum_rows(rows.real) + 1j * compensated_sum_rows(rows.imag)
    return np.array([math.fsum(col) for col in rows.T.tolist()])
