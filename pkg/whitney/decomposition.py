"""
Dyadic Whitney decomposition of the upper half-plane.

The square D(j, k) = [j 2^k, (j+1) 2^k) x [2^k, 2^(k+1)) has centre
((j + 1/2) 2^k, (3/2) 2^k) and area 4^k. The enlarged square is the
lam-dilation about the centre, clamped below at height 2^(k-1).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import OutOfDomain
from quadrature.adaptive import integrate
from quadrature.regions import AnnularSector, RectRegion

logger = logging.getLogger(__name__)

DEFAULT_ENLARGEMENT = 1.5
NODE_CHUNK = 2_000_000  # subgrid nodes evaluated per call


@dataclass(frozen=True)
class WhitneySquare:
    j: int
    k: int

    @property
    def side(self) -> float:
        return math.ldexp(1.0, self.k)

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(x0, x1, y0, y1) of the half-open square"""
        s = self.side
        return self.j * s, (self.j + 1) * s, s, 2.0 * s

    @property
    def center(self) -> complex:
        s = self.side
        return complex((self.j + 0.5) * s, 1.5 * s)

    @property
    def area(self) -> float:
        return math.ldexp(1.0, 2 * self.k)

    def enlarged(self, lam: float = DEFAULT_ENLARGEMENT) -> Tuple[float, float, float, float]:
        """(x0, x1, y0, y1) of the enlarged square, kept above height 2^(k-1)"""
        c, h = self.center, 0.5 * lam * self.side
        return c.real - h, c.real + h, max(c.imag - h, 0.5 * self.side), c.imag + h

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        x0, x1, y0, y1 = self.extent
        return (z.real >= x0) & (z.real < x1) & (z.imag >= y0) & (z.imag < y1)

    def contains_enlarged(self, z, lam: float = DEFAULT_ENLARGEMENT) -> np.ndarray:
        z = np.asarray(z)
        x0, x1, y0, y1 = self.enlarged(lam)
        return (z.real >= x0) & (z.real <= x1) & (z.imag >= y0) & (z.imag <= y1)

    def to_csv_row(self) -> str:
        return f"{self.j},{self.k}"


def square_indices(z) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised (j, k) of the squares containing the points z (Im z > 0 assumed)"""
    z = np.asarray(z)
    # y = m 2^e with m in [1/2, 1), so 2^(e-1) <= y < 2^e
    _, e = np.frexp(z.imag)
    k = e.astype(np.int64) - 1
    x = z.real
    j = np.floor(np.ldexp(x, -k)).astype(np.int64)
    # ldexp flushes subnormal x to zero; settle j against the square extent
    j -= x < np.ldexp(j.astype(float), k)
    j += x >= np.ldexp((j + 1).astype(float), k)
    return j, k


def square_of(z) -> WhitneySquare:
    """The unique Whitney square containing z"""
    z = complex(z)
    if not z.imag > 0:
        raise OutOfDomain(z, "upper half-plane")
    j, k = square_indices(np.array([z]))
    return WhitneySquare(int(j[0]), int(k[0]))


# ---------------------------------------------------------------------- region enumeration


def _level_bounds(y_lo: float, y_hi: float) -> range:
    if not (y_hi > y_lo and y_hi > 0):
        return range(0)
    y_lo = max(y_lo, np.finfo(float).tiny)
    return range(math.frexp(y_lo)[1] - 1, math.frexp(y_hi)[1])


def _sector_meets(sector: AnnularSector, x0, x1, y0, y1) -> np.ndarray:
    """
    Exact test: closed rectangles [x0,x1] x [y0,y1] (arrays, y0 > 0) against the sector.

    The rectangle is clipped to the wedge; the distances from the apex over
    the clipped convex set form an interval [dmin, dmax] that must meet
    [r_in, r_out].
    """
    x0 = np.asarray(x0, dtype=float) - sector.center
    x1 = np.asarray(x1, dtype=float) - sector.center
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    lo, hi = sector.theta_lo, sector.theta_hi

    corners_x = np.stack([x0, x1, x0, x1])
    corners_y = np.stack([y0, y0, y1, y1])
    ang = np.arctan2(corners_y, corners_x)
    dist = np.hypot(corners_x, corners_y)
    inside = (ang >= lo) & (ang <= hi)

    dmax = np.where(inside, dist, -np.inf).max(axis=0)
    # nearest point of the rectangle to the apex
    qx = np.clip(0.0, x0, x1)
    qy = y0
    q_ang = np.arctan2(qy, qx)
    dmin = np.where((q_ang >= lo) & (q_ang <= hi), np.hypot(qx, qy), np.inf)
    hit = inside.any(axis=0)

    for theta in (lo, hi):
        c, s = math.cos(theta), math.sin(theta)
        enter, leave = _ray_slab(c, s, x0, x1, y0, y1)
        crosses = enter <= leave
        hit |= crosses
        dmin = np.where(crosses, np.minimum(dmin, enter), dmin)
        dmax = np.where(crosses, np.maximum(dmax, leave), dmax)

    return hit & (dmin <= sector.r_out) & (dmax >= sector.r_in)


def _ray_slab(c: float, s: float, x0, x1, y0, y1):
    """Parameter interval of the ray t (c, s), t >= 0, inside each rectangle"""
    with np.errstate(divide="ignore", invalid="ignore"):
        if abs(c) > 1e-300:
            tx0, tx1 = x0 / c, x1 / c
            txa, txb = np.minimum(tx0, tx1), np.maximum(tx0, tx1)
        else:
            inside = (x0 <= 0.0) & (x1 >= 0.0)
            txa = np.where(inside, -np.inf, np.inf)
            txb = np.where(inside, np.inf, -np.inf)
        ty0, ty1 = y0 / s, y1 / s
    enter = np.maximum(np.maximum(txa, ty0), 0.0)
    leave = np.minimum(txb, ty1)
    return enter, leave


def _sector_candidates(sector: AnnularSector, by_center: bool):
    """Per-level candidate index ranges covering the sector"""
    y_top = sector.r_out
    y_bottom = sector.r_in * math.sin(min(sector.theta_lo, math.pi - sector.theta_hi))
    y_bottom = max(y_bottom, 0.0)
    cot_lo = math.cos(sector.theta_lo) / math.sin(sector.theta_lo)
    cot_hi = math.cos(sector.theta_hi) / math.sin(sector.theta_hi)
    for k in _level_bounds(y_bottom / (1.5 if by_center else 2.0), y_top / (1.5 if by_center else 1.0)):
        s = math.ldexp(1.0, k)
        y_max = 2.0 * s
        x_hi = sector.center + min(sector.r_out, max(y_max * cot_lo, 0.0) if cot_lo > 0 else sector.r_out)
        x_lo = sector.center - min(sector.r_out, max(-y_max * cot_hi, 0.0) if cot_hi < 0 else sector.r_out)
        j0, j1 = math.floor(x_lo / s) - 1, math.floor(x_hi / s) + 1
        yield k, s, np.arange(j0, j1 + 1, dtype=np.int64)


def squares_meeting(region) -> List[WhitneySquare]:
    """All Whitney squares with nonempty intersection with the region"""
    if isinstance(region, RectRegion):
        return _rect_squares(region)
    if isinstance(region, AnnularSector):
        if not (region.r_out >= region.r_in and region.theta_hi >= region.theta_lo):
            return []
        out: List[WhitneySquare] = []
        for k, s, js in _sector_candidates(region, by_center=False):
            keep = _sector_meets(region, js * s, (js + 1) * s, np.full(js.shape, s), np.full(js.shape, 2.0 * s))
            out.extend(WhitneySquare(int(j), k) for j in js[keep])
        return out
    raise TypeError(f"unsupported region {type(region).__name__}")


def _rect_squares(rect: RectRegion) -> List[WhitneySquare]:
    # half-open rectangle [x0, x1) x [y0, y1)
    if not (rect.x1 > rect.x0 and rect.y1 > rect.y0 and rect.y1 > 0):
        return []
    out = []
    for k in _level_bounds(max(rect.y0, 0.0), rect.y1):
        s = math.ldexp(1.0, k)
        if not (s < rect.y1 and rect.y0 < 2.0 * s):
            continue
        j0 = math.floor(rect.x0 / s)
        j1 = math.ceil(rect.x1 / s) - 1
        out.extend(WhitneySquare(j, k) for j in range(j0, j1 + 1))
    return out


def squares_with_centers_in(region) -> Tuple[np.ndarray, np.ndarray]:
    """(j, k) arrays of the squares whose centres lie in an annular sector"""
    js_all, ks_all = [], []
    for k, s, js in _sector_candidates(region, by_center=True):
        centers = (js + 0.5) * s + 1j * (1.5 * s)
        keep = region.contains(centers)
        js_all.append(js[keep])
        ks_all.append(np.full(int(keep.sum()), k, dtype=np.int64))
    if not js_all:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(js_all), np.concatenate(ks_all)


# ---------------------------------------------------------------------- overlap and level-set facts


def overlap_counts(points, lam: float = DEFAULT_ENLARGEMENT) -> np.ndarray:
    """Number of enlarged squares containing each point"""
    z = np.asarray(points, dtype=complex).ravel()
    _, k = square_indices(z)
    counts = np.zeros(z.shape, dtype=np.int64)
    for dk in (-1, 0, 1):
        kk = k + dk
        s = np.ldexp(1.0, kk)
        base = np.floor(z.real / s).astype(np.int64)
        for dj in (-2, -1, 0, 1, 2):
            jj = base + dj
            cx = (jj + 0.5) * s
            cy = 1.5 * s
            h = 0.5 * lam * s
            y_lo = np.maximum(cy - h, 0.5 * s)
            inside = (np.abs(z.real - cx) <= h) & (z.imag >= y_lo) & (z.imag <= cy + h)
            counts += inside
    return counts


def overlap_multiplicity(
    region=None,
    lam: float = DEFAULT_ENLARGEMENT,
    points=None,
    resolution: int = 200,
) -> int:
    """Maximum number of enlarged squares covering a point of a dense grid (or of ``points``)"""
    if points is None:
        points = _region_grid(region, resolution)
    if len(np.atleast_1d(points)) == 0:
        return 0
    return int(overlap_counts(points, lam).max())


def _region_grid(region, resolution: int) -> np.ndarray:
    if isinstance(region, RectRegion):
        xs = np.linspace(region.x0, region.x1, resolution, endpoint=False) + 0.5 * (region.x1 - region.x0) / resolution
        ys = np.linspace(region.y0, region.y1, resolution, endpoint=False) + 0.5 * (region.y1 - region.y0) / resolution
        xx, yy = np.meshgrid(xs, ys)
        return (xx + 1j * yy).ravel()
    if isinstance(region, AnnularSector):
        us = np.linspace(math.log(region.r_in), math.log(region.r_out), resolution)
        ts = np.linspace(region.theta_lo, region.theta_hi, resolution)
        uu, tt = np.meshgrid(us, ts)
        return (region.center + np.exp(uu) * np.exp(1j * tt)).ravel()
    raise TypeError(f"unsupported region {type(region).__name__}")


def subharmonic_bound_ratio(
    f,
    p: float,
    alpha: float,
    square: WhitneySquare,
    lam: float = DEFAULT_ENLARGEMENT,
    grid: int = 33,
    tol: float = 1e-8,
) -> float:
    """
    Empirical mean-value constant of one square.

    Grid sup over the square of |f|^p y^alpha divided by the mean of the same
    quantity over the enlarged square.
    """
    x0, x1, y0, y1 = square.extent
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    xx, yy = np.meshgrid(xs, ys)
    z = xx + 1j * yy
    g = np.abs(f.values(z)) ** p * yy**alpha
    top = float(g.max())

    ex0, ex1, ey0, ey1 = square.enlarged(lam)
    if not ey0 > 0:
        raise OutOfDomain(complex(ex0, ey0), "upper half-plane")
    box = RectRegion(ex0, ex1, ey0, ey1)
    mean = integrate(box, lambda w: np.abs(f.values(w)) ** p * w.imag**alpha, tol=tol) / ((ex1 - ex0) * (ey1 - ey0))
    if mean == 0.0:
        return 0.0 if top == 0.0 else math.inf
    return top / mean


def comparability_ratio(square: WhitneySquare, w, z) -> np.ndarray:
    """|w-bar - z| / |w_k-bar - z| for w in the square and z outside its enlargement"""
    c = square.center
    return np.abs(np.conj(w) - z) / np.abs(np.conj(c) - z)


def comparability_range(
    squares: Iterable[WhitneySquare], lam: float = DEFAULT_ENLARGEMENT, n: int = 4
) -> Tuple[float, float]:
    """Extremes of comparability_ratio, w on an n x n subgrid and z on the enlarged boundary"""
    lo, hi = math.nan, math.nan
    for sq in squares:
        w, _ = subgrid_nodes(np.array([sq.j]), np.array([sq.k]), n)
        x0, x1, y0, y1 = sq.enlarged(lam)
        xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        z = np.array([complex(x, y) for x in (x0, xm, x1) for y in (y0, ym, y1) if (x, y) != (xm, ym)])
        r = comparability_ratio(sq, w.ravel()[:, None], z[None, :])
        lo = float(r.min()) if math.isnan(lo) else min(lo, float(r.min()))
        hi = float(r.max()) if math.isnan(hi) else max(hi, float(r.max()))
    return lo, hi


# ---------------------------------------------------------------------- level-set areas


def subgrid_nodes(j: np.ndarray, k: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Midpoint nodes of an n x n subgrid of each square.

    Returns (nodes of shape (nsq, n*n), node area per square).
    """
    s = np.ldexp(1.0, k)
    offs = (np.arange(n) + 0.5) / n
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    x = (j * s)[:, None] + s[:, None] * ox.ravel()[None, :]
    y = s[:, None] + s[:, None] * oy.ravel()[None, :]
    return x + 1j * y, (s / n) ** 2


def levelset_fractions(
    member: Callable[[np.ndarray], np.ndarray],
    j: np.ndarray,
    k: np.ndarray,
    coarse: int = 8,
    fine: int = 32,
) -> np.ndarray:
    """
    Fraction of each square lying in a level set.

    Estimated on a coarse midpoint subgrid; squares whose coarse nodes
    disagree are resampled on the fine subgrid.
    """
    frac = _fractions(member, j, k, coarse)
    mixed = (frac > 0.0) & (frac < 1.0)
    if mixed.any():
        frac[mixed] = _fractions(member, j[mixed], k[mixed], fine)
    logger.debug("level-set subgrid: %d squares, %d refined", len(j), int(mixed.sum()))
    return frac


def _fractions(member, j, k, n) -> np.ndarray:
    out = np.zeros(len(j), dtype=float)
    step = max(1, NODE_CHUNK // (n * n))
    for lo in range(0, len(j), step):
        nodes, _ = subgrid_nodes(j[lo : lo + step], k[lo : lo + step], n)
        inside = member(nodes.ravel()).reshape(nodes.shape)
        out[lo : lo + step] = inside.mean(axis=1)
    return out


def squares_to_csv(squares: Iterable[WhitneySquare], extra: Optional[Dict[str, Sequence[float]]] = None) -> str:
    """One row per square: indices, extent, then any extra named columns"""
    extra = extra or {}
    lines = [",".join(["j", "k", "x0", "x1", "y0", "y1", *extra])]
    for i, sq in enumerate(squares):
        cols = [sq.to_csv_row(), *(repr(c) for c in sq.extent)]
        cols += [repr(float(v[i])) for v in extra.values()]
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"
