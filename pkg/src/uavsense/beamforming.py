"""Transmit and receive beamformers per (illuminator, receiver, cell).

The transmit side is the max-gain conjugate beamformer sqrt(P/N) * g, which
meets the power budget with equality and achieves the Cauchy-Schwarz bound
on the look-direction response. The receive side is a minimum variance
distortionless response (Capon) solution against the ground reflections
from outside the intended cell, with diagonal loading to keep the
covariance invertible. Because the interference covariance is rank one,
the solve uses the Sherman-Morrison closed form instead of a general
matrix inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .channel import (
    CENTER_SUBCARRIER,
    QuadratureConfig,
    REFERENCE_SUBCARRIER,
    ReflectionMatrix,
    Scene,
    _cell_nodes,
    _clutter_density,
)
from .geometry import ArraySpec, Direction, UavPose, steering_matrix, steering_vector

INTERFERENCE_SIMPLIFIED = "simplified"
INTERFERENCE_EXACT = "exact"

LOADING_SCALE = 1e-6
LOADING_FLOOR = 1e-12


@dataclass(frozen=True)
class BeamformerConfig:
    """Knobs for the beamformer table.

    ``power_w`` overrides the scene transmit power when set. ``loading``
    fixes the diagonal loading; when None it adapts to the interference
    power (LOADING_SCALE * trace/N with a LOADING_FLOOR floor).
    """

    power_w: float | None = None
    loading: float | None = None
    interference_mode: str = INTERFERENCE_SIMPLIFIED

    def __post_init__(self) -> None:
        if self.power_w is not None and self.power_w <= 0:
            raise ValueError("transmit power must be positive")
        if self.loading is not None and self.loading <= 0:
            raise ValueError("diagonal loading must be positive")
        if self.interference_mode not in (INTERFERENCE_SIMPLIFIED, INTERFERENCE_EXACT):
            raise ValueError(f"unknown interference mode: {self.interference_mode!r}")


@dataclass(frozen=True)
class BeamformerPair:
    """Weights for one (illuminating UAV, receiving UAV, cell) triple."""

    tx_uav: int
    rx_uav: int
    cell: int
    w_tx: np.ndarray
    w_rx: np.ndarray
    chi_tx: complex
    chi_rx: complex


def tx_beamformer(array: ArraySpec, direction: Direction, power_w: float) -> np.ndarray:
    """Conjugate transmit beamformer sqrt(P/N) * g toward ``direction``."""
    if power_w <= 0:
        raise ValueError("transmit power must be positive")
    g = steering_vector(array, direction)
    return math.sqrt(power_w / array.element_count) * g


def adaptive_loading(interference_response: np.ndarray, element_count: int) -> float:
    """Trace-relative diagonal loading with an absolute floor."""
    power = float(np.vdot(interference_response, interference_response).real)
    return max(LOADING_SCALE * power / element_count, LOADING_FLOOR)


def _mvdr_weights(x: np.ndarray, g: np.ndarray, loading: float) -> np.ndarray:
    """Distortionless minimizer of w^H (x x^H + loading I) w.

    Sherman-Morrison gives R^{-1} g up to scale as
    g - x (x^H g) / (loading + ||x||^2); normalizing by g^H y restores the
    unit response toward g.
    """
    if loading <= 0:
        raise ValueError("diagonal loading must be positive")
    xh_g = np.vdot(x, g)
    denom = loading + float(np.vdot(x, x).real)
    y = g - x * (xh_g / denom)
    scale = np.vdot(g, y)
    assert abs(scale) > 0, "loaded covariance cannot be singular"
    return y / scale


def rx_beamformer(
    interference: ReflectionMatrix | np.ndarray,
    w_tx: np.ndarray,
    g_rx: np.ndarray,
    loading: float | None = None,
) -> np.ndarray:
    """Diagonally loaded Capon receive beamformer against ground interference.

    ``interference`` is the response matrix of everything outside the
    intended cell; only its action on the fixed transmit beamformer enters
    the covariance, keeping the solve O(N).
    """
    matrix = interference.value if isinstance(interference, ReflectionMatrix) else interference
    x = matrix @ w_tx
    kappa = adaptive_loading(x, g_rx.size) if loading is None else loading
    return _mvdr_weights(x, g_rx, kappa)


def build_beamformer_table(
    scene: Scene,
    assignment: Mapping[int, Iterable[int]],
    config: BeamformerConfig = BeamformerConfig(),
    quad: QuadratureConfig = QuadratureConfig(),
    benchmark: bool = False,
) -> dict[tuple[int, int, int], BeamformerPair]:
    """Beamformer pairs for every (illuminator, receiver, assigned cell).

    In normal operation every UAV other than the illuminator receives; in
    benchmark (monostatic) mode the single UAV receives its own echoes.
    The interference seen by each receive beamformer is evaluated at the
    reference subcarrier, matching the one-beamformer-per-cell design.
    """
    power = config.power_w if config.power_w is not None else scene.tx_power_w
    centers = scene.grid.centers
    table: dict[tuple[int, int, int], BeamformerPair] = {}

    for tx in scene.uavs:
        own = list(assignment.get(tx.id, ()))
        if not own:
            continue
        receivers = [tx] if benchmark else [u for u in scene.uavs if u.id != tx.id]
        g_tx_own = steering_matrix(scene.array, tx.position, centers[own])
        w_tx_own = math.sqrt(power / scene.array.element_count) * g_tx_own

        for rx in receivers:
            g_rx_all = steering_matrix(scene.array, rx.position, centers)
            x_cols = _interference_responses(
                scene, tx, rx, own, w_tx_own, config.interference_mode, quad
            )
            for j, cell_index in enumerate(own):
                g = g_rx_all[cell_index]
                x = x_cols[:, j]
                kappa = (
                    adaptive_loading(x, scene.array.element_count)
                    if config.loading is None
                    else config.loading
                )
                w_rx = _mvdr_weights(x, g, kappa)
                table[(tx.id, rx.id, cell_index)] = BeamformerPair(
                    tx_uav=tx.id,
                    rx_uav=rx.id,
                    cell=cell_index,
                    w_tx=w_tx_own[j],
                    w_rx=w_rx,
                    chi_tx=complex(np.vdot(w_tx_own[j], g_tx_own[j])),
                    chi_rx=complex(np.vdot(w_rx, g)),
                )
    return table


def _ground_coefficients(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    points: np.ndarray,
    weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-point clutter coefficient and steering matrices at the reference subcarrier."""
    alpha = scene.pathloss_exponent
    d_tx = np.linalg.norm(points - tx.position, axis=1)
    d_rx = np.linalg.norm(points - rx.position, axis=1)
    delay = (d_tx + d_rx) / scene.light_speed
    phase = np.exp(
        -2j
        * math.pi
        * delay
        * scene.wave.subcarrier_spacing_hz
        * REFERENCE_SUBCARRIER
    )
    coef = (
        _clutter_density(scene)
        * weights
        * phase
        / (d_tx ** (alpha / 2.0) * d_rx ** (alpha / 2.0))
    )
    g_tx = steering_matrix(scene.array, tx.position, points)
    g_rx = steering_matrix(scene.array, rx.position, points)
    return coef, g_tx, g_rx


def _interference_responses(
    scene: Scene,
    tx: UavPose,
    rx: UavPose,
    own_cells: list[int],
    w_tx_own: np.ndarray,
    mode: str,
    quad: QuadratureConfig,
) -> np.ndarray:
    """Columns x_j = H_interference @ w_tx for each of the UAV's cells, (N, n_own)."""
    if mode == INTERFERENCE_SIMPLIFIED:
        weights = np.full(scene.grid.cell_count, scene.grid.cell_size**2)
        coef, g_tx, g_rx = _ground_coefficients(scene, tx, rx, scene.grid.centers, weights)
        # inner[p, j] = g_tx(p)^H w_tx_j
        inner = g_tx.conj() @ w_tx_own.T
        x_cols = g_rx.T @ (coef[:, None] * inner)
        for j, cell_index in enumerate(own_cells):
            x_cols[:, j] -= coef[cell_index] * inner[cell_index, j] * g_rx[cell_index]
        return x_cols
    if mode == INTERFERENCE_EXACT:
        q = quad.subdivisions
        nodes = np.concatenate(
            [_cell_nodes(c, scene.grid.cell_size, q) for c in scene.grid.base_cells()]
        )
        node_w = np.full(len(nodes), (scene.grid.cell_size / q) ** 2)
        coef, g_tx, g_rx = _ground_coefficients(scene, tx, rx, nodes, node_w)
        inner = g_tx.conj() @ w_tx_own.T
        x_cols = g_rx.T @ (coef[:, None] * inner)
        for j, cell_index in enumerate(own_cells):
            cell = scene.grid.cells[cell_index]
            own_nodes = _cell_nodes(cell, scene.grid.cell_size, q)
            own_w = np.full(len(own_nodes), (scene.grid.cell_size / q) ** 2)
            c_coef, c_g_tx, c_g_rx = _ground_coefficients(scene, tx, rx, own_nodes, own_w)
            x_cols[:, j] -= c_g_rx.T @ (c_coef * (c_g_tx.conj() @ w_tx_own[j]))
        return x_cols
    raise ValueError(f"unknown interference mode: {mode!r}")
