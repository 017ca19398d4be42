"""Planar geometry helpers shared by heap generation and grasp-space masking."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np

Point = Tuple[float, float]


def as_points(points: Sequence[Point] | np.ndarray) -> np.ndarray:
    """Return an ``(n, 2)`` float array, accepting an empty sequence."""
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=float)
    return arr.reshape(-1, 2)


def distances_to(points: np.ndarray, origin: Point) -> np.ndarray:
    return np.linalg.norm(points - np.asarray(origin, dtype=float), axis=1)


def distance(a: Point, b: Point) -> float:
    return float(distances_to(as_points([a]), b)[0])


def within_circles(points: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Flag points lying strictly inside at least one circle.

    A point exactly on a circle's boundary is outside it. Returns a boolean
    array with one entry per point.
    """
    if len(points) == 0 or len(centers) == 0:
        return np.zeros(len(points), dtype=bool)
    gaps = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    return np.any(gaps < radii[None, :], axis=1)


def point_in_circle(point: Point, center: Point, radius: float) -> bool:
    return bool(within_circles(as_points([point]), as_points([center]), np.array([radius]))[0])


def boundary_points(center: Point, radius: float, count: int, phase: float = 0.0) -> List[Point]:
    """Points on an angular grid of a circle, ordered by increasing angle."""
    step = 2.0 * math.pi / count
    return [
        (center[0] + radius * math.cos(phase + k * step), center[1] + radius * math.sin(phase + k * step))
        for k in range(count)
    ]
