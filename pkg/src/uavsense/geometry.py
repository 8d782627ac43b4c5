"""Ground grids, UAV placement, look directions, and planar-array steering.

Everything in this module is pure geometry: the cell lattices tiling the
sensing area, the UAV deployment lattice, azimuth/elevation look angles,
bistatic propagation delays, and half-wavelength planar-array steering
vectors. All outputs are immutable after construction and safe to share
across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

BASE_LAYER = "base"
OVERLAY_LAYER = "overlay"

GRID_BASE = "base"
GRID_MIXED = "mixed"


def _frozen(arr: Iterable[float]) -> np.ndarray:
    out = np.asarray(arr, dtype=float).copy()
    out.setflags(write=False)
    return out


def _is_perfect_square(n: int) -> bool:
    if n < 1:
        return False
    r = math.isqrt(n)
    return r * r == n


@dataclass(frozen=True)
class Cell:
    """One square ground cell, identified by its center point (z = 0)."""

    index: int
    center: np.ndarray
    layer: str


@dataclass(frozen=True)
class GridSpec:
    """Cell lattice covering the square sensing area.

    The base lattice splits the side into ``base_divisions`` cells per axis.
    A mixed grid superimposes an overlay lattice shifted by half a cell in
    both axes; overlay cells whose centers would fall on or outside the
    boundary are dropped, leaving (L-1)^2 of them. Cells are ordered base
    row-major first (x fastest), then overlay row-major.
    """

    side_length: float
    base_divisions: int
    cell_size: float
    cells: tuple[Cell, ...]
    grid_kind: str

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    @property
    def base_count(self) -> int:
        return self.base_divisions**2

    @cached_property
    def centers(self) -> np.ndarray:
        """(P, 3) array of cell centers in cell-index order."""
        out = np.stack([c.center for c in self.cells])
        out.setflags(write=False)
        return out

    @cached_property
    def layers(self) -> np.ndarray:
        out = np.array([c.layer for c in self.cells])
        out.setflags(write=False)
        return out

    def base_cells(self) -> tuple[Cell, ...]:
        return self.cells[: self.base_count]


@dataclass(frozen=True)
class UavPose:
    """A hovering UAV with a unique id and fixed position [x, y, h]."""

    id: int
    position: np.ndarray

    @property
    def altitude(self) -> float:
        return float(self.position[2])


@dataclass(frozen=True)
class ArraySpec:
    """Square downward-facing uniform planar array.

    ``element_count`` must be a perfect square; elements sit on a
    ``side x side`` lattice with half-wavelength pitch by default.
    """

    element_count: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self) -> None:
        if not _is_perfect_square(self.element_count):
            raise ValueError(
                f"element_count must be a perfect square, got {self.element_count}"
            )
        if self.spacing_wavelengths <= 0:
            raise ValueError("element spacing must be positive")

    @property
    def side(self) -> int:
        return math.isqrt(self.element_count)


@dataclass(frozen=True)
class Direction:
    """Look direction relative to the array boresight (straight down).

    ``elevation`` is measured from boresight, so 0 means nadir and pi/2 a
    horizontal ray. ``azimuth`` is the usual atan2(dy, dx) ground-plane
    angle.
    """

    azimuth: float
    elevation: float

    def __post_init__(self) -> None:
        if not -math.pi <= self.azimuth <= math.pi:
            raise ValueError(f"azimuth out of [-pi, pi]: {self.azimuth}")
        if not 0.0 <= self.elevation <= math.pi / 2 + 1e-12:
            raise ValueError(f"elevation out of [0, pi/2]: {self.elevation}")


@dataclass(frozen=True)
class PathGeometry:
    """Bistatic path: transmitter -> ground point -> receiver."""

    distance_tx: float
    distance_rx: float
    delay_s: float
    doppler_hz: float


def build_grid(side_length: float, base_divisions: int, kind: str = GRID_MIXED) -> GridSpec:
    """Construct the base or mixed cell lattice over the square area.

    Base cell (i, j) is centered at ((i+1/2)d, (j+1/2)d, 0) with
    d = side_length / base_divisions; overlay centers are base centers
    shifted by (d/2, d/2), keeping only those strictly inside the area.
    """
    if side_length <= 0:
        raise ValueError(f"side_length must be positive, got {side_length}")
    if base_divisions < 2:
        raise ValueError(f"base_divisions must be at least 2, got {base_divisions}")
    if kind not in (GRID_BASE, GRID_MIXED):
        raise ValueError(f"unknown grid kind: {kind!r}")

    d = side_length / base_divisions
    cells: list[Cell] = []
    for iy in range(base_divisions):
        for ix in range(base_divisions):
            center = _frozen([(ix + 0.5) * d, (iy + 0.5) * d, 0.0])
            cells.append(Cell(index=len(cells), center=center, layer=BASE_LAYER))
    if kind == GRID_MIXED:
        for iy in range(base_divisions - 1):
            for ix in range(base_divisions - 1):
                center = _frozen([(ix + 1.0) * d, (iy + 1.0) * d, 0.0])
                cells.append(Cell(index=len(cells), center=center, layer=OVERLAY_LAYER))
    return GridSpec(
        side_length=float(side_length),
        base_divisions=int(base_divisions),
        cell_size=d,
        cells=tuple(cells),
        grid_kind=kind,
    )


def place_uavs(count: int, side_length: float, altitude: float) -> tuple[UavPose, ...]:
    """Deploy UAVs on a centered sqrt(U) x sqrt(U) lattice at common altitude.

    A single UAV goes to the geometric center of the area (the monostatic
    benchmark placement). Any other non-square count is rejected.
    """
    if altitude <= 0:
        raise ValueError(f"altitude must be positive, got {altitude}")
    if count == 1:
        pos = _frozen([side_length / 2, side_length / 2, altitude])
        return (UavPose(id=0, position=pos),)
    if not _is_perfect_square(count):
        raise ValueError(f"UAV count must be 1 or a perfect square, got {count}")
    side = math.isqrt(count)
    pitch = side_length / side
    poses: list[UavPose] = []
    for iy in range(side):
        for ix in range(side):
            pos = _frozen([(ix + 0.5) * pitch, (iy + 0.5) * pitch, altitude])
            poses.append(UavPose(id=len(poses), position=pos))
    return tuple(poses)


def direction_to(origin: np.ndarray, point: np.ndarray) -> Direction:
    """Direction of ``point`` as seen from a downward-facing array at ``origin``."""
    delta = np.asarray(point, dtype=float) - np.asarray(origin, dtype=float)
    horiz = math.hypot(delta[0], delta[1])
    rng = math.sqrt(horiz * horiz + delta[2] * delta[2])
    if rng == 0.0:
        raise ValueError("direction undefined for coincident points")
    elevation = math.asin(min(1.0, horiz / rng))
    azimuth = math.atan2(delta[1], delta[0])
    return Direction(azimuth=azimuth, elevation=elevation)


def steering_vector(array: ArraySpec, direction: Direction) -> np.ndarray:
    """Array response phasor for a plane wave from ``direction``.

    Element (m, n) of the side x side lattice contributes
    exp(j * 2*pi*spacing * (m u + n v)) with u = sin(el)cos(az) and
    v = sin(el)sin(az); entries are returned in row-major (m, n) order.
    Every entry has unit modulus, so ||g||^2 = N.
    """
    u = math.sin(direction.elevation) * math.cos(direction.azimuth)
    v = math.sin(direction.elevation) * math.sin(direction.azimuth)
    m = np.arange(array.side)
    phase = 2.0 * math.pi * array.spacing_wavelengths * (
        m[:, None] * u + m[None, :] * v
    )
    return np.exp(1j * phase).ravel()


def steering_matrix(array: ArraySpec, origin: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Steering vectors toward many ground points at once, shape (P, N).

    Equivalent to stacking ``steering_vector(array, direction_to(origin, p))``
    for each row p of ``points`` but without per-point trigonometry:
    sin(el)cos(az) and sin(el)sin(az) reduce to dx/r and dy/r.
    """
    delta = np.asarray(points, dtype=float) - np.asarray(origin, dtype=float)
    rng = np.linalg.norm(delta, axis=-1)
    if np.any(rng == 0.0):
        raise ValueError("steering undefined for coincident points")
    u = delta[..., 0] / rng
    v = delta[..., 1] / rng
    m = np.arange(array.side)
    phase = (m[:, None] * u[..., None, None] + m[None, :] * v[..., None, None])
    phase = 2.0 * math.pi * array.spacing_wavelengths * phase
    return np.exp(1j * phase).reshape(*delta.shape[:-1], array.element_count)


def path_geometry(
    tx: UavPose,
    point: np.ndarray,
    rx: UavPose,
    light_speed: float = SPEED_OF_LIGHT,
    doppler_hz: float = 0.0,
) -> PathGeometry:
    """Bistatic distances and propagation delay for one ground point.

    The delay is the full reflection path (d_tx + d_rx) / c0. The Doppler
    frequency is whatever the scene configures for the reflector (zero for
    static scenes).
    """
    point = np.asarray(point, dtype=float)
    d_tx = float(np.linalg.norm(tx.position - point))
    d_rx = float(np.linalg.norm(point - rx.position))
    if d_tx == 0.0 or d_rx == 0.0:
        raise ValueError("ground point coincides with a UAV position")
    return PathGeometry(
        distance_tx=d_tx,
        distance_rx=d_rx,
        delay_s=(d_tx + d_rx) / light_speed,
        doppler_hz=doppler_hz,
    )


def assign_cells(grid: GridSpec, uavs: Sequence[UavPose]) -> dict[int, tuple[int, ...]]:
    """Partition the cells among UAVs by nearest horizontal distance.

    Every cell is assigned to exactly one UAV (ties broken by lowest UAV
    id), so the sets partition the grid: disjoint with full coverage.
    """
    if len(uavs) == 0:
        raise ValueError("at least one UAV is required")
    order = sorted(uavs, key=lambda u: u.id)
    positions = np.stack([u.position[:2] for u in order])
    centers = grid.centers[:, :2]
    dists = np.linalg.norm(centers[:, None, :] - positions[None, :, :], axis=2)
    nearest = np.argmin(dists, axis=1)  # first minimum -> lowest id
    assignment: dict[int, list[int]] = {u.id: [] for u in order}
    for cell_index, uav_slot in enumerate(nearest):
        assignment[order[uav_slot].id].append(cell_index)
    return {uid: tuple(cells) for uid, cells in assignment.items()}
