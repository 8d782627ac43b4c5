"""Received-symbol synthesis: clutter, target echo, and noise per frame.

A received frame for one (illuminator, receiver, cell) triple is the sum of
the ground response coupled through the beamformer pair, the point-target
echo with its per-subcarrier delay and per-symbol Doppler phasors, and
circularly symmetric Gaussian noise. Ground clutter is deterministic given
the geometry, so it is summarized once per triple as a coupling profile
over subcarriers and reused for both synthesis and the known-clutter
subtraction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .beamforming import BeamformerPair
from .channel import (
    CENTER_SUBCARRIER,
    PER_SUBCARRIER,
    QuadratureConfig,
    REFERENCE_SUBCARRIER,
    Scene,
    _cell_nodes,
    _clutter_density,
)
from .geometry import steering_matrix
from .waveform import DATA_FREE, RECEIVED, NoiseSpec, SymbolBlock

CLUTTER_CELL_CENTER = "cell-center"
CLUTTER_QUADRATURE = "quadrature"

_FOUR_PI_CUBED_SQRT = (4.0 * math.pi) ** 1.5


class FidelityMismatchWarning(UserWarning):
    """Known-clutter subtraction ran at a different fidelity than synthesis."""


@dataclass(frozen=True)
class ClutterResponse:
    """Beamformed ground coupling for one triple, per subcarrier.

    ``coupling[k]`` is the complex clutter contribution to the data-free
    symbol at subcarrier k (constant across OFDM symbols for a static
    ground). Center-subcarrier fidelity evaluates the delay phases once at
    the reference subcarrier, so the profile is flat.
    """

    tx_uav: int
    rx_uav: int
    cell: int
    fidelity: str
    coupling: np.ndarray


def clutter_response(
    scene: Scene,
    pair: BeamformerPair,
    quad: QuadratureConfig = QuadratureConfig(),
    spatial: str = CLUTTER_CELL_CENTER,
    cells: np.ndarray | None = None,
) -> ClutterResponse:
    """Total beamformed ground coupling for a triple.

    The ground is represented by the base-layer tiling (each patch counted
    once). ``spatial`` selects cell-center point reflectors with d^2 area
    weights or the full per-cell midpoint mesh. ``cells`` restricts the sum
    to a subset of base-layer cell indices, mainly for diagnostics.
    """
    if scene.ground_rcs == 0.0:
        coupling = np.zeros(scene.wave.subcarriers, dtype=complex)
        return ClutterResponse(pair.tx_uav, pair.rx_uav, pair.cell,
                               quad.clutter_fidelity, coupling)

    selected = (
        scene.grid.base_cells()
        if cells is None
        else [scene.grid.cells[int(i)] for i in cells]
    )
    d = scene.grid.cell_size
    if spatial == CLUTTER_CELL_CENTER:
        points = np.stack([c.center for c in selected])
        weights = np.full(len(points), d**2)
    elif spatial == CLUTTER_QUADRATURE:
        q = quad.subdivisions
        points = np.concatenate([_cell_nodes(c, d, q) for c in selected])
        weights = np.full(len(points), (d / q) ** 2)
    else:
        raise ValueError(f"unknown spatial clutter mode: {spatial!r}")

    tx = scene.uav(pair.tx_uav)
    rx = scene.uav(pair.rx_uav)
    alpha = scene.pathloss_exponent
    d_tx = np.linalg.norm(points - tx.position, axis=1)
    d_rx = np.linalg.norm(points - rx.position, axis=1)
    delay = (d_tx + d_rx) / scene.light_speed
    g_tx = steering_matrix(scene.array, tx.position, points)
    g_rx = steering_matrix(scene.array, rx.position, points)
    # per-point coupling through the fixed beamformer pair
    coef = (
        _clutter_density(scene)
        * weights
        / (d_tx ** (alpha / 2.0) * d_rx ** (alpha / 2.0))
        * (g_rx @ pair.w_rx.conj())  # w_rx^H g_rx(point)
        * (g_tx.conj() @ pair.w_tx)  # g_tx(point)^H w_tx
    )
    spacing = scene.wave.subcarrier_spacing_hz
    if quad.clutter_fidelity == PER_SUBCARRIER:
        k = np.arange(scene.wave.subcarriers)
        coupling = np.exp(-2j * math.pi * np.outer(delay, k) * spacing).T @ coef
    else:
        ref = np.exp(-2j * math.pi * delay * spacing * REFERENCE_SUBCARRIER)
        coupling = np.full(scene.wave.subcarriers, complex(coef @ ref))
    return ClutterResponse(pair.tx_uav, pair.rx_uav, pair.cell,
                           quad.clutter_fidelity, coupling)


@lru_cache(maxsize=16)
def _index_range(n: int) -> np.ndarray:
    out = np.arange(n)
    out.setflags(write=False)
    return out


def _fast_steering(array, origin: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Steering vector toward one point without the Direction round-trip."""
    dx = float(point[0]) - float(origin[0])
    dy = float(point[1]) - float(origin[1])
    dz = float(point[2]) - float(origin[2])
    rng = math.sqrt(dx * dx + dy * dy + dz * dz)
    m = _index_range(array.side)
    coeff = 2.0 * math.pi * array.spacing_wavelengths / rng
    phase = (coeff * dx) * m[:, None] + (coeff * dy) * m[None, :]
    return np.exp(1j * phase).ravel()


def target_coupling(scene: Scene, pair: BeamformerPair) -> tuple[complex, float]:
    """Beamformed target amplitude and bistatic delay for a triple."""
    tx = scene.uav(pair.tx_uav)
    rx = scene.uav(pair.rx_uav)
    target = scene.target_position
    d_tx = math.dist(tx.position, target)
    d_rx = math.dist(target, rx.position)
    if d_tx == 0.0 or d_rx == 0.0:
        raise ValueError("target coincides with a UAV position")
    alpha = scene.pathloss_exponent
    amp = (
        math.sqrt(scene.target_rcs)
        * scene.wavelength
        / (_FOUR_PI_CUBED_SQRT * (d_tx * d_rx) ** (alpha / 2.0))
    )
    g_rx = _fast_steering(scene.array, rx.position, target)
    g_tx = _fast_steering(scene.array, tx.position, target)
    coupling = np.vdot(pair.w_rx, g_rx) * np.vdot(g_tx, pair.w_tx) * amp
    return complex(coupling), (d_tx + d_rx) / scene.light_speed


def synthesize_received(
    scene: Scene,
    pair: BeamformerPair,
    frame: SymbolBlock,
    noise: NoiseSpec,
    rng: np.random.Generator,
    clutter: ClutterResponse | None = None,
    quad: QuadratureConfig = QuadratureConfig(),
) -> SymbolBlock:
    """One received frame: (clutter + target) * transmitted symbols + noise.

    The target echo always uses the exact point model with per-(symbol,
    subcarrier) Doppler/delay phases; clutter follows the fidelity of the
    supplied (or computed) coupling profile. Noise is complex Gaussian
    with total per-sample power ``noise.power_w``.
    """
    wave = scene.wave
    if frame.values.shape != (wave.symbols, wave.subcarriers):
        raise ValueError("frame shape does not match the waveform")
    if clutter is None:
        clutter = clutter_response(scene, pair, quad)
    if (clutter.tx_uav, clutter.rx_uav, clutter.cell) != (
        pair.tx_uav,
        pair.rx_uav,
        pair.cell,
    ):
        raise ValueError("clutter response does not match the beamformer pair")

    if scene.target_rcs > 0.0:
        coupling, delay = target_coupling(scene, pair)
        k = _index_range(wave.subcarriers)
        delay_row = np.exp((-2j * math.pi * delay * wave.subcarrier_spacing_hz) * k)
        if scene.doppler_hz == 0.0:
            # static target: the response is constant across OFDM symbols
            response = clutter.coupling + coupling * delay_row
            values = frame.values * response[None, :]
        else:
            l = _index_range(wave.symbols)
            doppler_col = np.exp(
                (2j * math.pi * scene.doppler_hz * wave.symbol_duration_s) * l
            )
            response = clutter.coupling[None, :] + coupling * np.outer(
                doppler_col, delay_row
            )
            values = frame.values * response
    else:
        values = frame.values * clutter.coupling[None, :]
    if noise.power_w > 0.0:
        scale = math.sqrt(noise.power_w / 2.0)
        noise_block = rng.standard_normal((wave.symbols, wave.subcarriers, 2))
        values += scale * noise_block.view(np.complex128)[..., 0]
    return SymbolBlock(values=values, kind=RECEIVED)


def subtract_known_clutter(
    block: SymbolBlock,
    clutter: ClutterResponse,
    synthesis_fidelity: str | None = None,
) -> SymbolBlock:
    """Remove the deterministic ground coupling from a data-free block.

    With matched fidelity the cancellation is exact for a noiseless,
    target-free frame. A fidelity mismatch leaves a residual and raises a
    warning, not an error.
    """
    if block.kind != DATA_FREE:
        raise ValueError(f"expected a data-free block, got {block.kind!r}")
    if synthesis_fidelity is not None and synthesis_fidelity != clutter.fidelity:
        warnings.warn(
            f"clutter synthesized at {synthesis_fidelity!r} but subtracted at "
            f"{clutter.fidelity!r}; residual ground energy remains",
            FidelityMismatchWarning,
            stacklevel=2,
        )
    return SymbolBlock(values=block.values - clutter.coupling[None, :], kind=DATA_FREE)
