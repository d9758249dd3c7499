from __future__ import annotations

import math

import numpy as np
import pytest

from hiernav.scene import OccupancyGrid, Region, Scene, SceneObject


def winding_number_inside(point, polygon):
    """Brute-force winding oracle: sum of subtended signed angles."""
    x, y = point
    total = 0.0
    n = len(polygon)
    for i in range(n):
        ax, ay = polygon[i][0] - x, polygon[i][1] - y
        bx, by = polygon[(i + 1) % n][0] - x, polygon[(i + 1) % n][1] - y
        total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    return abs(total) > math.pi


def make_scene(
    rows,
    cell_size=1.0,
    origin=(0.0, 0.0),
    regions=(),
    objects=(),
    scene_id="test",
) -> Scene:
    grid = OccupancyGrid.from_rows(list(rows), origin=origin, cell_size=cell_size)
    return Scene(id=scene_id, regions=tuple(regions), objects=tuple(objects), grid=grid)


def open_room(size=10, cell_size=1.0, **kwargs) -> Scene:
    """A fully free square grid."""
    rows = ["." * size for _ in range(size)]
    return make_scene(rows, cell_size=cell_size, **kwargs)


def rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240831)
