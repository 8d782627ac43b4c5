"""Complex reflection matrices for ground patches and the point target.

The baseband response of a single reflector is a rank-1 outer product of
receive and transmit steering vectors, scaled by the bistatic radar
amplitude sqrt(rcs) * lambda / ((4 pi)^(3/2) d_tx^(a/2) d_rx^(a/2)) and
rotated by the Doppler (per OFDM symbol) and delay (per subcarrier)
phasors. Ground clutter is the same integrand integrated over area, with
the amplitude density sqrt(ground_rcs) / side^2 spread uniformly; the
integrals are evaluated with a midpoint rule on a per-cell mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .geometry import (
    SPEED_OF_LIGHT,
    ArraySpec,
    BASE_LAYER,
    Cell,
    GridSpec,
    UavPose,
    direction_to,
    path_geometry,
    steering_matrix,
    steering_vector,
)
from .waveform import WaveformSpec

CENTER_SUBCARRIER = "center-subcarrier"
PER_SUBCARRIER = "per-subcarrier"

# Subcarrier index at which precomputed clutter phases are referenced.
REFERENCE_SUBCARRIER = 0

_FOUR_PI_CUBED_SQRT = (4.0 * math.pi) ** 1.5


@dataclass(frozen=True)
class Scene:
    """Full physical context: grid, UAVs, arrays, waveform, reflectors.

    ``ground_rcs`` is spread uniformly over the whole area; the target is a
    point reflector at ``target_position`` (z = 0). Free-space pathloss
    corresponds to ``pathloss_exponent`` = 2.
    """

    grid: GridSpec
    uavs: tuple[UavPose, ...]
    array: ArraySpec
    wave: WaveformSpec
    target_position: np.ndarray
    target_rcs: float
    ground_rcs: float
    carrier_hz: float
    tx_power_w: float = 1.0
    pathloss_exponent: float = 2.0
    light_speed: float = SPEED_OF_LIGHT
    doppler_hz: float = 0.0

    def __post_init__(self) -> None:
        if self.target_rcs < 0 or self.ground_rcs < 0:
            raise ValueError("radar cross-sections must be nonnegative")
        if self.carrier_hz <= 0 or self.tx_power_w <= 0:
            raise ValueError("carrier frequency and transmit power must be positive")
        ids = [u.id for u in self.uavs]
        if len(set(ids)) != len(ids):
            raise ValueError("UAV ids must be unique")
        for u in self.uavs:
            if u.altitude <= 0:
                raise ValueError(f"UAV {u.id} must hover above the ground")

    @property
    def wavelength(self) -> float:
        return self.light_speed / self.carrier_hz

    @cached_property
    def _uav_index(self) -> dict[int, UavPose]:
        return {u.id: u for u in self.uavs}

    def uav(self, uav_id: int) -> UavPose:
        try:
            return self._uav_index[uav_id]
        except KeyError:
            raise KeyError(f"no UAV with id {uav_id}") from None

    def with_target(self, position: np.ndarray) -> "Scene":
        return replace(self, target_position=np.asarray(position, dtype=float))


@dataclass(frozen=True)
class QuadratureConfig:
    """Midpoint-rule mesh density and clutter frequency fidelity.

    ``subdivisions`` is the per-axis node count inside each cell.
    ``clutter_fidelity`` selects whether precomputed clutter couplings
    carry per-subcarrier delay phases or a single reference-subcarrier
    evaluation.
    """

    subdivisions: int = 4
    clutter_fidelity: str = CENTER_SUBCARRIER

    def __post_init__(self) -> None:
        if self.subdivisions < 1:
            raise ValueError("quadrature subdivisions must be at least 1")
        if self.clutter_fidelity not in (CENTER_SUBCARRIER, PER_SUBCARRIER):
            raise ValueError(f"unknown clutter fidelity: {self.clutter_fidelity!r}")


@dataclass(frozen=True)
class ReflectionMatrix:
    """N x N complex response tagged with its source and evaluation index."""

    tx: int
    rx: int
    source: str
    value: np.ndarray
    subcarrier: int = 0


def _clutter_density(scene: Scene) -> float:
    """Amplitude density of the uniformly spread ground reflectivity."""
    area = scene.grid.side_length**2
    return scene.wavelength * math.sqrt(scene.ground_rcs) / (_FOUR_PI_CUBED_SQRT * area)


def _cell_nodes(cell: Cell, cell_size: float, subdivisions: int) -> np.ndarray:
    """Midpoint-rule nodes of one cell, shape (Q^2, 3)."""
    q = subdivisions
    offsets = (np.arange(q) + 0.5) / q - 0.5
    ox, oy = np.meshgrid(offsets, offsets, indexing="xy")
    nodes = np.zeros((q * q, 3))
    nodes[:, 0] = cell.center[0] + ox.ravel() * cell_size
    nodes[:, 1] = cell.center[1] + oy.ravel() * cell_size
    return nodes


def _summed_response(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    points: np.ndarray,
    weights: np.ndarray,
    k: int,
) -> np.ndarray:
    """Sum of weighted rank-1 responses over ground points.

    ``weights`` carries the per-point area weight; the bistatic amplitude,
    pathloss, and delay phasor at subcarrier ``k`` are applied here.
    """
    alpha = scene.pathloss_exponent
    g_rx = steering_matrix(scene.array, rx.position, points)
    g_tx = steering_matrix(scene.array, tx.position, points)
    d_tx = np.linalg.norm(points - tx.position, axis=1)
    d_rx = np.linalg.norm(points - rx.position, axis=1)
    delay = (d_tx + d_rx) / scene.light_speed
    phase = np.exp(-2j * math.pi * delay * scene.wave.subcarrier_spacing_hz * k)
    coef = (
        _clutter_density(scene)
        * weights
        * phase
        / (d_tx ** (alpha / 2.0) * d_rx ** (alpha / 2.0))
    )
    return g_rx.T @ (coef[:, None] * g_tx.conj())


def point_matrix(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    point: np.ndarray,
    rcs: float,
    k: int = 0,
    symbol_index: int = 0,
) -> ReflectionMatrix:
    """Rank-1 response of a single point reflector of the given cross-section."""
    if rcs < 0:
        raise ValueError("rcs must be nonnegative")
    geo = path_geometry(tx, point, rx, scene.light_speed, scene.doppler_hz)
    alpha = scene.pathloss_exponent
    amp = (
        math.sqrt(rcs)
        * scene.wavelength
        / (_FOUR_PI_CUBED_SQRT * (geo.distance_tx * geo.distance_rx) ** (alpha / 2.0))
    )
    phase = np.exp(
        2j * math.pi * geo.doppler_hz * scene.wave.symbol_duration_s * symbol_index
    ) * np.exp(-2j * math.pi * geo.delay_s * scene.wave.subcarrier_spacing_hz * k)
    g_rx = steering_vector(scene.array, direction_to(rx.position, point))
    g_tx = steering_vector(scene.array, direction_to(tx.position, point))
    value = (amp * phase) * np.outer(g_rx, g_tx.conj())
    return ReflectionMatrix(tx=tx.id, rx=rx.id, source="point", value=value, subcarrier=k)


def cell_clutter_matrix(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    cell: Cell,
    k: int = 0,
    quad: QuadratureConfig = QuadratureConfig(),
) -> ReflectionMatrix:
    """Ground response integrated over one cell with a Q x Q midpoint rule."""
    nodes = _cell_nodes(cell, scene.grid.cell_size, quad.subdivisions)
    weight = (scene.grid.cell_size / quad.subdivisions) ** 2
    weights = np.full(len(nodes), weight)
    value = _summed_response(scene, tx, rx, nodes, weights, k)
    return ReflectionMatrix(
        tx=tx.id, rx=rx.id, source=f"cell:{cell.index}", value=value, subcarrier=k
    )


def total_clutter_matrix(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    k: int = 0,
    quad: QuadratureConfig = QuadratureConfig(),
) -> ReflectionMatrix:
    """Ground response of the whole area.

    Integrates over the base-layer cells only: they tile the area exactly
    once, so the result equals the sum of the per-cell matrices. Overlay
    cells overlap the base patches and are excluded from the tiling.
    """
    q = quad.subdivisions
    node_list = [
        _cell_nodes(cell, scene.grid.cell_size, q) for cell in scene.grid.base_cells()
    ]
    nodes = np.concatenate(node_list)
    weights = np.full(len(nodes), (scene.grid.cell_size / q) ** 2)
    value = _summed_response(scene, tx, rx, nodes, weights, k)
    return ReflectionMatrix(tx=tx.id, rx=rx.id, source="total", value=value, subcarrier=k)


def interference_matrix(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    excluded_cell: int,
    k: int = 0,
    mode: str = "simplified",
    quad: QuadratureConfig = QuadratureConfig(),
) -> ReflectionMatrix:
    """Ground response excluding the intended cell.

    ``exact`` subtracts the cell's integral from the whole-area integral.
    ``simplified`` replaces every other cell by its center point with a d^2
    area weight, summed over all grid cells (both layers of a mixed grid).
    """
    if not 0 <= excluded_cell < scene.grid.cell_count:
        raise ValueError(f"unknown cell id: {excluded_cell}")
    if mode == "exact":
        total = total_clutter_matrix(scene, tx, rx, k, quad)
        own = cell_clutter_matrix(scene, tx, rx, scene.grid.cells[excluded_cell], k, quad)
        value = total.value - own.value
    elif mode == "simplified":
        keep = np.arange(scene.grid.cell_count) != excluded_cell
        points = scene.grid.centers[keep]
        weights = np.full(len(points), scene.grid.cell_size**2)
        value = _summed_response(scene, tx, rx, points, weights, k)
    else:
        raise ValueError(f"unknown interference mode: {mode!r}")
    return ReflectionMatrix(
        tx=tx.id,
        rx=rx.id,
        source=f"complement:{excluded_cell}",
        value=value,
        subcarrier=k,
    )


def target_matrix(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    k: int = 0,
    symbol_index: int = 0,
) -> ReflectionMatrix:
    """Point response of the scene target."""
    m = point_matrix(
        scene, tx, rx, scene.target_position, scene.target_rcs, k, symbol_index
    )
    return ReflectionMatrix(tx=m.tx, rx=m.rx, source="target", value=m.value, subcarrier=k)
