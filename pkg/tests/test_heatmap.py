import numpy as np
import pytest

from catalog.functions import TestFunction
from core.errors import OutOfDomain
from service.heatmap import (
    BACKGROUND_TOP,
    OVERLAY_BASE,
    members_to_csv,
    pixel_centers,
    render_heatmap,
    weighted_modulus,
)


def test_pixel_centres_top_row_first():
    z = pixel_centers((0.0, 4.0, 0.0, 2.0), (4, 2))
    assert z.shape == (2, 4)
    assert z[0, 0] == 0.5 + 1.5j
    assert z[1, 3] == 3.5 + 0.5j


def test_single_pixel():
    z = pixel_centers((-1.0, 1.0, 1.0, 3.0), (1, 1))
    assert z[0, 0] == 2j


def test_sector_levelset(pure_power):
    # |z^-1| y = sin(arg z) >= 1/2
    image, z, member = render_heatmap(pure_power, 1.0, 0.5, resolution=(64, 32))
    assert image.size == (64, 32)
    assert image.mode == "L"
    assert member[0, 32]
    assert not member[-1, 0]
    sine = np.sin(np.angle(z))
    clear = np.abs(sine - 0.5) > 1e-9
    assert np.array_equal(member[clear], (sine >= 0.5)[clear])
    pixels = np.asarray(image)
    assert pixels[member].min() >= OVERLAY_BASE
    assert pixels[~member].max() <= BACKGROUND_TOP


def test_no_overlay_above_sup(pure_power):
    image, _, member = render_heatmap(pure_power, 1.0, 2.0, resolution=(16, 16))
    assert not member.any()
    assert np.asarray(image).max() <= BACKGROUND_TOP


def test_disk_outside_is_black(ball_pole):
    image, z, member = render_heatmap(ball_pole, 1.0, 1.5, resolution=(32, 32))
    pixels = np.asarray(image)
    outside = np.abs(z) >= 1.0
    assert np.all(pixels[outside] == 0)
    assert not member[outside].any()
    assert member.any()


def test_c2_uses_the_first_coordinate_slice():
    z = pixel_centers((-1.0, 1.0, -1.0, 1.0), (8, 8))
    flat = weighted_modulus(TestFunction(kind="ball_pole", s=1.0), 1.0, z)
    sliced = weighted_modulus(TestFunction(kind="ball_pole", s=1.0, n=2), 1.0, z, n=2)
    assert np.allclose(flat, sliced)


@pytest.mark.parametrize(
    "viewport, fixture",
    [
        ((-1.0, 1.0, 0.0, 1.0), "pure_power"),
        ((1.0, -1.0, 0.5, 1.0), "pure_power"),
        ((-1.0, 2.0, -1.0, 1.0), "ball_pole"),
    ],
)
def test_bad_viewports(viewport, fixture, request):
    with pytest.raises(OutOfDomain):
        render_heatmap(request.getfixturevalue(fixture), 1.0, 0.5, viewport=viewport)


def test_members_csv(pure_power):
    _, z, member = render_heatmap(pure_power, 1.0, 0.5, resolution=(8, 8))
    lines = members_to_csv(z, member).splitlines()
    assert lines[0] == "row,col,x,y"
    assert len(lines) == 1 + int(member.sum())
    row, col, x, y = lines[1].split(",")
    assert complex(float(x), float(y)) == z[int(row), int(col)]
