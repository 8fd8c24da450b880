"""Planar geometry in degree space and the hexagonal pool grid.

Cells at level ``L`` are points of a hexagonal lattice with spacing
``base_size / sqrt(7)**L``.  Each level is rotated against its parent by the
aperture-7 angle ``atan(sqrt(3)/5)``, with the sign alternating per level, so
that every parent center is itself a lattice point one level down and the
seven children of all parents enumerate the child lattice exactly once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Sequence

import numpy as np

from hfcs import kernels

DEFAULT_BASE_SIZE = 5.0
SQRT7 = math.sqrt(7.0)
APERTURE7_ANGLE = math.atan(math.sqrt(3.0) / 5.0)
MAX_LEVEL = 24
# below this many points a plain scan beats building arrays for the kernel
SMALL_SCAN = 32


@dataclass(frozen=True, order=True)
class GeoCoordinate:
    lon: float
    lat: float

    def __post_init__(self):
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")

    @classmethod
    def clamped(cls, lon: float, lat: float) -> "GeoCoordinate":
        return cls(min(180.0, max(-180.0, lon)), min(90.0, max(-90.0, lat)))


def distance(a: GeoCoordinate, b: GeoCoordinate) -> float:
    return math.hypot(a.lon - b.lon, a.lat - b.lat)


def _distance_xy(ax: float, ay: float, bx: float, by: float) -> float:
    return math.hypot(ax - bx, ay - by)


@lru_cache(maxsize=None)
def _orientation(level: int) -> float:
    phi = 0.0
    for k in range(level):
        phi += APERTURE7_ANGLE if k % 2 == 0 else -APERTURE7_ANGLE
    return phi


@lru_cache(maxsize=None)
def _basis(level: int, base_size: float) -> tuple[tuple[float, float], tuple[float, float], tuple[float, ...]]:
    size = base_size / SQRT7**level
    phi = _orientation(level)
    e1 = (size * math.cos(phi), size * math.sin(phi))
    e2 = (size * math.cos(phi + math.pi / 3), size * math.sin(phi + math.pi / 3))
    det = e1[0] * e2[1] - e2[0] * e1[1]
    inv = (e2[1] / det, -e2[0] / det, -e1[1] / det, e1[0] / det)
    return e1, e2, inv


def _lattice_point(level: int, i: int, j: int, base_size: float) -> tuple[float, float]:
    e1, e2, _ = _basis(level, base_size)
    return (i * e1[0] + j * e2[0], i * e1[1] + j * e2[1])


def _lattice_coords(level: int, x: float, y: float, base_size: float) -> tuple[float, float]:
    _, _, inv = _basis(level, base_size)
    return (inv[0] * x + inv[1] * y, inv[2] * x + inv[3] * y)


@dataclass(frozen=True)
class HexCell:
    """A hexagonal cell addressed by its level and lattice coordinates."""

    level: int
    i: int
    j: int
    base_size: float = DEFAULT_BASE_SIZE

    @property
    def size(self) -> float:
        return self.base_size / SQRT7**self.level

    @property
    def center(self) -> GeoCoordinate:
        x, y = _lattice_point(self.level, self.i, self.j, self.base_size)
        return GeoCoordinate(x, y)

    @property
    def center_xy(self) -> tuple[float, float]:
        return _lattice_point(self.level, self.i, self.j, self.base_size)

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.level, self.i, self.j)

    def __repr__(self):
        return f"HexCell(L{self.level}, {self.i}, {self.j})"


def _cell_at_xy(level: int, x: float, y: float, base_size: float) -> HexCell:
    a, b = _lattice_coords(level, x, y, base_size)
    return HexCell(level, round(a), round(b), base_size)


def _tie_key(cell: HexCell, x: float, y: float):
    cx, cy = cell.center_xy
    return (_distance_xy(cx, cy, x, y), cx, cy)


def nearest_lattice_cell(level: int, p: GeoCoordinate, base_size: float = DEFAULT_BASE_SIZE) -> HexCell:
    """Nearest lattice center at ``level``; ties go to lower lon, then lower lat.

    The basis vectors are 60 degrees apart, so the lattice triangulates into
    equilateral triangles and the nearest center is a corner of the unit
    parallelogram holding ``p``.
    """
    e1, e2, inv = _basis(level, base_size)
    x, y = p.lon, p.lat
    a = inv[0] * x + inv[1] * y
    b = inv[2] * x + inv[3] * y
    fa, fb = math.floor(a), math.floor(b)
    best = None
    for i, j in ((fa, fb), (fa + 1, fb), (fa, fb + 1), (fa + 1, fb + 1)):
        cx = i * e1[0] + j * e2[0]
        cy = i * e1[1] + j * e2[1]
        key = (math.hypot(cx - x, cy - y), cx, cy)
        if best is None or key < best[0]:
            best = (key, i, j)
    return HexCell(level, best[1], best[2], base_size)


def base_cell_of(p: GeoCoordinate, base_size: float = DEFAULT_BASE_SIZE) -> HexCell:
    return nearest_lattice_cell(0, p, base_size)


def subdivide(cell: HexCell) -> list[HexCell]:
    """The seven children of ``cell``: the central child first, then six outer ones."""
    child_level = cell.level + 1
    size = cell.size / SQRT7
    phi = _orientation(child_level)
    cx, cy = cell.center_xy
    children = [_cell_at_xy(child_level, cx, cy, cell.base_size)]
    for k in range(6):
        ang = phi + k * math.pi / 3
        children.append(_cell_at_xy(child_level, cx + size * math.cos(ang), cy + size * math.sin(ang), cell.base_size))
    return children


_NEIGHBOR_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def neighbors(cell: HexCell) -> list[HexCell]:
    return [HexCell(cell.level, cell.i + di, cell.j + dj, cell.base_size) for di, dj in _NEIGHBOR_OFFSETS]


def parent(cell: HexCell) -> HexCell:
    if cell.level == 0:
        raise ValueError("base cells have no parent")
    x, y = cell.center_xy
    return nearest_lattice_cell(cell.level - 1, GeoCoordinate.clamped(x, y), cell.base_size)


def nearest_child(cell: HexCell, p: GeoCoordinate) -> HexCell:
    return min(subdivide(cell), key=lambda c: _tie_key(c, p.lon, p.lat))


def cell_at(p: GeoCoordinate, level: int, base_size: float = DEFAULT_BASE_SIZE) -> HexCell:
    """Descend from the base cell to ``level`` through nearest children."""
    cell = base_cell_of(p, base_size)
    for _ in range(level):
        cell = nearest_child(cell, p)
    return cell


def nearest(items: Sequence[tuple[Hashable, GeoCoordinate]], p: GeoCoordinate):
    """Id of the item closest to ``p``; ties go to the lower id."""
    if not items:
        raise ValueError("nearest() of an empty collection")
    ordered = sorted(items, key=lambda it: it[0])
    if len(ordered) <= SMALL_SCAN:
        x, y = p.lon, p.lat
        return min(ordered, key=lambda it: math.hypot(it[1].lon - x, it[1].lat - y))[0]
    xs = np.fromiter((c.lon for _, c in ordered), dtype=np.float64, count=len(ordered))
    ys = np.fromiter((c.lat for _, c in ordered), dtype=np.float64, count=len(ordered))
    return ordered[kernels.nearest_index(xs, ys, p.lon, p.lat)][0]


class PointIndex:
    """Sorted id/position arrays for repeated nearest queries over a fixed set."""

    __slots__ = ("ids", "xs", "ys")

    def __init__(self, items: Sequence[tuple[int, GeoCoordinate]]):
        ordered = sorted(items, key=lambda it: it[0])
        self.ids = [i for i, _ in ordered]
        self.xs = np.array([c.lon for _, c in ordered], dtype=np.float64)
        self.ys = np.array([c.lat for _, c in ordered], dtype=np.float64)

    def __len__(self):
        return len(self.ids)

    def nearest(self, p: GeoCoordinate):
        k = kernels.nearest_index(self.xs, self.ys, p.lon, p.lat)
        return None if k < 0 else self.ids[k]
