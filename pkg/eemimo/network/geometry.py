"""Hexagonal 19-cell layout with wrap-around and average channel-gain statistics.

Cells are flat-top hexagons of circumradius ``d_max``. Cell 0 sits at the
origin and the remaining cells follow the first and second rings in the usual
axial-coordinate ring walk. Wrap-around treats the 19-cell cluster as a torus:
seen from any cell, every other base station is first brought back into the
cluster centred on that cell and then the nearest of its seven images (the
cluster and its six translated copies) is used.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import shapely
from scipy.stats import qmc
from shapely.geometry import Polygon

logger = logging.getLogger(__name__)

SUPPORTED_CELLS = 19
_CLUSTER_RADIUS = 2

# Axial neighbour directions for flat-top hexagons.
_AXIAL_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))
# Translations tiling the plane with copies of the radius-2 cluster.
_CLUSTER_SHIFTS = ((5, -2), (3, -5), (-2, -3), (-5, 2), (-3, 5), (2, 3))


def _axial_to_xy(q: float, r: float, radius: float) -> tuple[float, float]:
    return radius * 1.5 * q, radius * math.sqrt(3.0) * (r + q / 2.0)


def _cluster_axial() -> list[tuple[int, int]]:
    cells = [(0, 0)]
    for ring in range(1, _CLUSTER_RADIUS + 1):
        dq, dr = _AXIAL_DIRECTIONS[4]
        q, r = dq * ring, dr * ring
        for direction in range(6):
            for _ in range(ring):
                cells.append((q, r))
                step_q, step_r = _AXIAL_DIRECTIONS[direction]
                q, r = q + step_q, r + step_r
    return cells


def _rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _wedge_points(count: int, d_max: float, d_min: float) -> np.ndarray:
    """Deterministic uniform points in the 0-60 degree wedge of the hexagon."""

    v0 = np.array([d_max, 0.0])
    v1 = np.array([d_max / 2.0, d_max * math.sqrt(3.0) / 2.0])
    sampler = qmc.Halton(d=2, scramble=False)

    accepted: list[np.ndarray] = []
    total = 0
    while total < count:
        batch = max(64, int(1.1 * (count - total)) + 16)
        uv = sampler.random(batch)
        folded = uv.sum(axis=1) > 1.0
        uv[folded] = 1.0 - uv[folded]
        points = uv[:, :1] * v0 + uv[:, 1:] * v1
        keep = np.hypot(points[:, 0], points[:, 1]) >= d_min
        accepted.append(points[keep])
        total += int(keep.sum())

    return np.concatenate(accepted)[:count]


def _cell_grid(grid_size: int, d_max: float, d_min: float) -> np.ndarray:
    """Return ``grid_size`` points relative to a cell centre.

    The wedge pattern is rotated over the six wedges and interleaved, so any
    multiple of six points is exactly invariant under 60 degree rotations.
    """

    per_wedge = math.ceil(grid_size / 6)
    wedge = _wedge_points(per_wedge, d_max, d_min)
    rotated = np.stack([wedge @ _rotation(k * math.pi / 3.0).T for k in range(6)], axis=1)
    return rotated.reshape(-1, 2)[:grid_size]


def _hexagon(center: np.ndarray, d_max: float) -> Polygon:
    angles = np.arange(6) * math.pi / 3.0
    return Polygon(
        [(center[0] + d_max * math.cos(a), center[1] + d_max * math.sin(a)) for a in angles]
    )


@dataclass(slots=True, frozen=True, eq=False)
class NetworkLayout:
    """Cell geometry, wrap offsets and per-cell user test points (metres)."""

    cell_centers: np.ndarray
    cell_radius: float
    min_distance: float
    wrap_offsets: np.ndarray
    test_points: np.ndarray
    axial: np.ndarray = field(repr=False)

    @property
    def num_cells(self) -> int:
        return int(self.cell_centers.shape[0])

    @property
    def grid_size(self) -> int:
        return int(self.test_points.shape[1])

    def hexagon(self, cell: int) -> Polygon:
        return _hexagon(self.cell_centers[cell], self.cell_radius)

    def relative_position(self, cell: int, other: int) -> np.ndarray:
        """Position of BS ``other`` seen from cell ``cell``, folded into its cluster."""

        rel = self.cell_centers[other] - self.cell_centers[cell]
        candidates = rel + self.wrap_offsets
        return candidates[int(np.argmin(np.hypot(candidates[:, 0], candidates[:, 1])))]

    def wrap_distance(self, cell: int, other: int) -> float:
        position = self.relative_position(cell, other)
        return float(np.hypot(position[0], position[1]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_cells": self.num_cells,
            "cell_radius": self.cell_radius,
            "min_distance": self.min_distance,
            "grid_size": self.grid_size,
            "cell_centers": self.cell_centers.tolist(),
            "wrap_offsets": self.wrap_offsets.tolist(),
        }


@dataclass(slots=True, frozen=True, eq=False)
class CouplingGains:
    """Average own-cell and cross-cell gain statistics.

    ``g_own[c]`` is ``E[1/g_cck]`` and ``g_cross[c, d]`` is ``E[g_dck/g_cck]``;
    the diagonal of ``g_cross`` is kept at zero so row sums give the total
    normalised interference coupling of a cell.
    """

    g_own: np.ndarray
    g_cross: np.ndarray

    @property
    def num_cells(self) -> int:
        return int(self.g_own.shape[0])

    def cross_sum(self, cell: int | None = None) -> float | np.ndarray:
        sums = self.g_cross.sum(axis=1)
        return sums if cell is None else float(sums[cell])

    def mean_cross_sum(self) -> float:
        return float(np.mean(self.g_cross.sum(axis=1)))

    def mean_own(self) -> float:
        return float(np.mean(self.g_own))

    def to_dict(self) -> dict[str, Any]:
        return {"g_own": self.g_own.tolist(), "g_cross": self.g_cross.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CouplingGains:
        return cls(g_own=np.asarray(data["g_own"], dtype=float), g_cross=np.asarray(data["g_cross"], dtype=float))


def build_layout(
    num_cells: int = SUPPORTED_CELLS,
    d_max: float = 500.0,
    d_min: float = 35.0,
    grid_size: int = 15000,
) -> NetworkLayout:
    """Build the wrap-around hexagonal layout with its test-point grid."""

    if num_cells != SUPPORTED_CELLS:
        raise ValueError(f"only the {SUPPORTED_CELLS}-cell layout is supported (got {num_cells})")
    if d_min < 0.0 or d_min >= d_max:
        raise ValueError("min distance must be non-negative and smaller than the cell radius")
    if grid_size < 1:
        raise ValueError("grid_size must be at least 1")

    axial = np.array(_cluster_axial(), dtype=int)
    centers = np.array([_axial_to_xy(q, r, d_max) for q, r in axial])
    offsets = np.array([(0.0, 0.0)] + [_axial_to_xy(q, r, d_max) for q, r in _CLUSTER_SHIFTS])

    local = _cell_grid(grid_size, d_max, d_min)
    test_points = centers[:, None, :] + local[None, :, :]

    tolerance = 1e-9 * d_max
    for cell in range(num_cells):
        area = _hexagon(centers[cell], d_max).buffer(tolerance)
        inside = shapely.intersects_xy(area, test_points[cell, :, 0], test_points[cell, :, 1])
        if not bool(np.all(inside)):
            raise AssertionError(f"test point outside hexagon of cell {cell}")

    for array in (axial, centers, offsets, test_points):
        array.setflags(write=False)

    logger.info(
        "Layout criado: %s células, raio %.1f m, %s pontos de teste por célula",
        num_cells,
        d_max,
        grid_size,
    )
    return NetworkLayout(
        cell_centers=centers,
        cell_radius=float(d_max),
        min_distance=float(d_min),
        wrap_offsets=offsets,
        test_points=test_points,
        axial=axial,
    )


def pathloss_gain(distance: np.ndarray | float, coefficient: float, exponent: float) -> np.ndarray | float:
    """Large-scale channel gain ``coefficient / distance**exponent``."""

    return coefficient / np.power(distance, exponent)


def compute_coupling(
    layout: NetworkLayout,
    pathloss_coeff: float = 10.0 ** -3.53,
    pathloss_exp: float = 3.76,
) -> CouplingGains:
    """Average ``G_cc`` and ``G_cd`` over each cell's test points."""

    if pathloss_coeff <= 0.0:
        raise ValueError("pathloss coefficient must be positive")
    if pathloss_exp <= 2.0:
        raise ValueError("pathloss exponent must exceed 2")

    cells = layout.num_cells
    g_own = np.empty(cells)
    g_cross = np.zeros((cells, cells))

    for cell in range(cells):
        local = layout.test_points[cell] - layout.cell_centers[cell]
        own_distance = np.hypot(local[:, 0], local[:, 1])
        if np.any(own_distance <= 0.0):
            raise ValueError(f"test point at zero distance from BS {cell}")
        g_own[cell] = float(np.mean(np.power(own_distance, pathloss_exp))) / pathloss_coeff

        for other in range(cells):
            if other == cell:
                continue
            images = layout.relative_position(cell, other) + layout.wrap_offsets
            delta = local[:, None, :] - images[None, :, :]
            distance = np.hypot(delta[..., 0], delta[..., 1]).min(axis=1)
            if np.any(distance <= 0.0):
                raise ValueError(f"test point of cell {cell} at zero distance from BS {other}")
            # g_dck / g_cck reduces to a distance ratio: the coefficient cancels.
            g_cross[cell, other] = float(np.mean(np.power(own_distance / distance, pathloss_exp)))

    g_own.setflags(write=False)
    g_cross.setflags(write=False)
    logger.info(
        "Ganhos de acoplamento: G_cc médio=%.4e, soma média de G_cd=%.4f",
        float(np.mean(g_own)),
        float(np.mean(g_cross.sum(axis=1))),
    )
    return CouplingGains(g_own=g_own, g_cross=g_cross)


__all__ = [
    "CouplingGains",
    "NetworkLayout",
    "SUPPORTED_CELLS",
    "build_layout",
    "compute_coupling",
    "pathloss_gain",
]
