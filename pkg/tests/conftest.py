from __future__ import annotations

import os

import numpy as np
import pytest

from siltrack import load_mesh

ASSETS = os.path.join(os.path.dirname(__file__), os.pardir, "assets")


def asset_path(name: str) -> str:
    return os.path.abspath(os.path.join(ASSETS, name))


@pytest.fixture(scope="session")
def cube_mesh():
    return load_mesh(asset_path("cube.mesh"))


@pytest.fixture(scope="session")
def satellite_mesh():
    return load_mesh(asset_path("satellite.mesh"))


@pytest.fixture(scope="session")
def panel_mesh():
    return load_mesh(asset_path("satellite_panel.mesh"))


# ── Brute-force oracles shared across test modules ──────────────────────

def point_in_triangle(px: float, py: float, tri) -> bool:
    """Naive sign test: inside or on the boundary of one triangle."""
    (ax, ay), (bx, by), (cx, cy) = tri
    area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if area2 == 0.0:
        return False
    e0 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    e1 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
    e2 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
    if area2 > 0.0:
        return e0 >= 0.0 and e1 >= 0.0 and e2 >= 0.0
    return e0 <= 0.0 and e1 <= 0.0 and e2 <= 0.0


def brute_force_mask(tris2d, width: int, height: int) -> np.ndarray:
    """Per-pixel, per-triangle silhouette: the rasterizer's independent oracle."""
    mask = np.zeros((height, width), dtype=bool)
    for j in range(height):
        for i in range(width):
            x, y = i + 0.5, j + 0.5
            mask[j, i] = any(point_in_triangle(x, y, tri) for tri in tris2d)
    return mask


def direct_log_likelihood(model, image, mask) -> float:
    """Literal log-space evaluation of the measurement likelihood:
    sum_f log fg + sum_b log bg - sum_all log total, pixel by pixel."""
    total = 0.0
    height, width = image.shape
    for j in range(height):
        for i in range(width):
            v = int(image[j, i])
            if mask[j, i]:
                total += float(np.log(model.foreground[v]))
            else:
                total += float(np.log(model.background[v]))
            total -= float(np.log(model.total[v]))
    return total
