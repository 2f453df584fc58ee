"""
Integration regions.

A region is a union of boxes, each box living in a coordinate chart that maps
(u, v) to a point z of the half-plane or the disk together with the Jacobian
of the area element. Ladder regions (annular sectors on the half-plane,
delta-shells on the disk) are boxes in the log-polar and shell charts.
"""

import math
from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np

Chart = Literal["cartesian", "logpolar", "disk_polar", "disk_shell"]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Box:
    chart: Chart
    u0: float
    u1: float
    v0: float
    v1: float
    center: float = 0.0  # horizontal centre of the log-polar chart

    @property
    def empty(self) -> bool:
        return not (self.u1 > self.u0 and self.v1 > self.v0)

    def initial_split(self) -> Tuple[int, int]:
        """Starting number of cells along u and v"""
        du, dv = self.u1 - self.u0, self.v1 - self.v0
        if self.chart == "logpolar":
            return max(1, math.ceil(du / math.log(2.0))), max(1, math.ceil(4.0 * dv / math.pi))
        if self.chart in ("disk_polar", "disk_shell"):
            nu = max(1, math.ceil(du / math.log(2.0))) if self.chart == "disk_shell" else 2
            return nu, max(1, math.ceil(8.0 * dv / TWO_PI))
        return 2, 2


def chart_map(chart: Chart, u: np.ndarray, v: np.ndarray, center: float = 0.0):
    """Map chart coordinates to complex points and area Jacobians"""
    if chart == "cartesian":
        return u + 1j * v, np.ones_like(u)
    if chart == "logpolar":
        r = np.exp(u)
        return center + r * np.exp(1j * v), r * r
    if chart == "disk_polar":
        return u * np.exp(1j * v), u
    if chart == "disk_shell":
        # delta = 1 - r^2 = e^-tau, so r dr = e^-tau / 2 dtau
        e = np.exp(-u)
        r = np.sqrt(-np.expm1(-u))
        return r * np.exp(1j * v), 0.5 * e
    raise ValueError(f"unknown chart {chart}")


@dataclass(frozen=True)
class RectRegion:
    """Axis-parallel rectangle [x0,x1] x [y0,y1] of the half-plane"""

    x0: float
    x1: float
    y0: float
    y1: float

    def boxes(self) -> List[Box]:
        return [Box("cartesian", self.x0, self.x1, self.y0, self.y1)]

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        return (z.real >= self.x0) & (z.real <= self.x1) & (z.imag >= self.y0) & (z.imag <= self.y1)

    @property
    def y_range(self) -> Tuple[float, float]:
        return self.y0, self.y1


@dataclass(frozen=True)
class AnnularSector:
    """{r_in <= |z - center| <= r_out, theta_lo <= arg(z - center) <= theta_hi}"""

    r_in: float
    r_out: float
    theta_lo: float
    theta_hi: float
    center: float = 0.0

    def boxes(self) -> List[Box]:
        return [Box("logpolar", math.log(self.r_in), math.log(self.r_out), self.theta_lo, self.theta_hi, self.center)]

    def contains(self, z) -> np.ndarray:
        w = np.asarray(z) - self.center
        r, th = np.abs(w), np.angle(w)
        return (r >= self.r_in) & (r <= self.r_out) & (th >= self.theta_lo) & (th <= self.theta_hi)

    @property
    def y_range(self) -> Tuple[float, float]:
        return self.r_in * math.sin(self.theta_lo), self.r_out


@dataclass(frozen=True)
class DiskShells:
    """The set delta(z) = 1 - |z|^2 >= delta_min of the unit disk"""

    delta_min: float

    def boxes(self) -> List[Box]:
        split = max(self.delta_min, 0.5)
        boxes = [Box("disk_polar", 0.0, math.sqrt(1.0 - split), 0.0, TWO_PI)]
        if self.delta_min < split:
            boxes.append(Box("disk_shell", -math.log(split), -math.log(self.delta_min), 0.0, TWO_PI))
        return boxes

    def contains(self, z) -> np.ndarray:
        return 1.0 - np.abs(np.asarray(z)) ** 2 >= self.delta_min


@dataclass(frozen=True)
class DiskRegion:
    """Closed disk |z| <= radius (radius <= 1)"""

    radius: float = 1.0

    def boxes(self) -> List[Box]:
        return [Box("disk_polar", 0.0, self.radius, 0.0, TWO_PI)]

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z)) <= self.radius


def halfplane_level(m: int, base: float, center: float = 0.0) -> AnnularSector:
    """Ladder region m of the half-plane, with angular clearance base^-m"""
    clearance = base ** (-m)
    return AnnularSector(base ** (-m), base**m, clearance, math.pi - clearance, center)


def halfplane_increment(m_prev: int, m: int, base: float, center: float = 0.0) -> List[Box]:
    """Boxes covering level m minus level m_prev (log-polar chart)"""
    L0, L1 = m_prev * math.log(base), m * math.log(base)
    c0, c1 = base ** (-m_prev), base ** (-m)
    boxes = [
        Box("logpolar", L0, L1, c1, math.pi - c1, center),
        Box("logpolar", -L1, -L0, c1, math.pi - c1, center),
        Box("logpolar", -L0, L0, c1, c0, center),
        Box("logpolar", -L0, L0, math.pi - c0, math.pi - c1, center),
    ]
    return [b for b in boxes if not b.empty]


def disk_level(m: int, base: float) -> DiskShells:
    return DiskShells(base ** (-m))


def disk_increment(m_prev: int, m: int, base: float) -> List[Box]:
    return [Box("disk_shell", m_prev * math.log(base), m * math.log(base), 0.0, TWO_PI)]


def disk_core(m: int, base: float) -> List[Box]:
    """The first disk ladder level in plain polar coordinates (smooth at the origin)"""
    return [Box("disk_polar", 0.0, math.sqrt(1.0 - base ** (-m)), 0.0, TWO_PI)]
