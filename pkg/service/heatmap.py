"""
Level-set heatmaps.

Pixels show min(1, |f| * weight) in the band 0..191; pixels of the level set
are lifted into the band 224..255 so the set stands out at any intensity.
Rows run from the top of the viewport down, pixels are sampled at their
centres.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from catalog.functions import TestFunction
from core.errors import OutOfDomain

logger = logging.getLogger(__name__)

Viewport = Tuple[float, float, float, float]

BACKGROUND_TOP = 191
OVERLAY_BASE = 224
OVERLAY_SPAN = 31

DEFAULT_HALFPLANE_VIEWPORT: Viewport = (-2.0, 2.0, 2.0**-6, 2.0)
DEFAULT_DISK_VIEWPORT: Viewport = (-1.0, 1.0, -1.0, 1.0)


def pixel_centers(viewport: Viewport, resolution: Tuple[int, int]) -> np.ndarray:
    """(height, width) complex array of pixel centres, first row at the top"""
    x0, x1, y0, y1 = viewport
    width, height = resolution
    xs = x0 + (np.arange(width) + 0.5) * (x1 - x0) / width
    ys = y1 - (np.arange(height) + 0.5) * (y1 - y0) / height
    return xs[None, :] + 1j * ys[:, None]


def _check_viewport(viewport: Viewport, domain: str) -> None:
    x0, x1, y0, y1 = viewport
    if not (x1 > x0 and y1 > y0):
        raise OutOfDomain(list(viewport), "viewport (needs x0 < x1 and y0 < y1)")
    if domain == "halfplane" and not y0 > 0:
        raise OutOfDomain(list(viewport), "upper half-plane")
    if domain == "ball" and not (x0 >= -1 and x1 <= 1 and y0 >= -1 and y1 <= 1):
        raise OutOfDomain(list(viewport), "square [-1, 1]^2 around the disk")


def weighted_modulus(f: TestFunction, weight: float, z: np.ndarray, n: int = 1) -> np.ndarray:
    """|f| * (Im z)^weight on the half-plane, |f| * delta^weight on the disk (slice z2 = 0 in C^2)"""
    if f.domain == "halfplane":
        return np.abs(f.values(z)) * z.imag**weight
    inside = np.abs(z) < 1.0
    safe = np.where(inside, z, 0.0)
    pts = safe if n == 1 else np.stack([safe, np.zeros_like(safe)], axis=-1)
    values = np.abs(f.values(pts)) * (1.0 - np.abs(safe) ** 2) ** weight
    return np.where(inside, values, 0.0)


def render_heatmap(
    f: TestFunction,
    weight: float,
    eps: float,
    viewport: Optional[Viewport] = None,
    resolution: Tuple[int, int] = (256, 256),
    n: int = 1,
) -> Tuple[Image.Image, np.ndarray, np.ndarray]:
    """
    Render the level set {|f| * weight >= eps}.

    Returns the image, the pixel-centre points and the membership mask. On
    the ball pixels outside the unit disk are black and never members.
    """
    domain = f.domain
    viewport = viewport or (DEFAULT_HALFPLANE_VIEWPORT if domain == "halfplane" else DEFAULT_DISK_VIEWPORT)
    _check_viewport(viewport, domain)
    z = pixel_centers(viewport, resolution)
    values = weighted_modulus(f, weight, z, n)
    member = values >= eps
    if domain == "ball":
        member &= np.abs(z) < 1.0
    v = np.minimum(1.0, values)
    pixels = np.where(member, OVERLAY_BASE + np.rint(v * OVERLAY_SPAN), np.rint(v * BACKGROUND_TOP))
    if domain == "ball":
        pixels = np.where(np.abs(z) < 1.0, pixels, 0)
    image = Image.fromarray(pixels.astype(np.uint8))
    logger.info("heatmap %s eps=%g: %d of %d pixels in the level set", f.label, eps, int(member.sum()), member.size)
    return image, z, member


def members_to_csv(z: np.ndarray, member: np.ndarray) -> str:
    """One row per member pixel: row, column and pixel centre"""
    rows, cols = np.nonzero(member)
    lines = ["row,col,x,y"]
    for r, c in zip(rows.tolist(), cols.tolist()):
        p = complex(z[r, c])
        lines.append(f"{r},{c},{p.real!r},{p.imag!r}")
    return "\n".join(lines) + "\n"
