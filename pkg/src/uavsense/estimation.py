"""Cell RCS estimation: sufficient statistics, MLE forms, and fusion.

Each receiver compresses a data-free frame into one complex statistic, the
phase-compensated coherent sum over all symbols and subcarriers. The
maximum-likelihood cross-section of a cell is then a closed form in those
statistics: a single-receiver (local) form, and a central form that stacks
receivers with pathloss weights. Three fusion modes build grid maps or a
fused position from the local quantities, and a monostatic single-UAV run
provides the benchmark map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .beamforming import BeamformerPair
from .channel import QuadratureConfig, Scene
from .geometry import GridSpec, UavPose, build_grid
from .protocol import SampleStore, Schedule, build_schedule, run_campaign
from .rng import StreamFactory
from .signal import ClutterResponse
from .waveform import NoiseSpec, SymbolBlock

_FOUR_PI_CUBED = (4.0 * math.pi) ** 3

PROVENANCE_BENCHMARK = "benchmark"
PROVENANCE_MIMORE = "central-mimore"
PROVENANCE_MURE = "fused-mure"


@dataclass(frozen=True)
class PhaseReference:
    """Expected phase evolution of a cell's echo at one receiver.

    ``delay_phasors[k]`` undoes the subcarrier delay rotation and
    ``doppler_phasors[l]`` the per-symbol Doppler rotation, so an echo
    exactly at the reference sums fully coherently.
    """

    delay_s: float
    doppler_hz: float
    delay_phasors: np.ndarray
    doppler_phasors: np.ndarray
    tx_distance: float
    rx_distance: float


def phase_reference(
    scene: Scene, illuminator: UavPose, receiver: UavPose, cell_center: np.ndarray
) -> PhaseReference:
    d_tx = float(np.linalg.norm(illuminator.position - cell_center))
    d_rx = float(np.linalg.norm(cell_center - receiver.position))
    delay = (d_tx + d_rx) / scene.light_speed
    wave = scene.wave
    k = np.arange(wave.subcarriers)
    l = np.arange(wave.symbols)
    return PhaseReference(
        delay_s=delay,
        doppler_hz=scene.doppler_hz,
        delay_phasors=np.exp(2j * math.pi * delay * wave.subcarrier_spacing_hz * k),
        doppler_phasors=np.exp(
            -2j * math.pi * scene.doppler_hz * wave.symbol_duration_s * l
        ),
        tx_distance=d_tx,
        rx_distance=d_rx,
    )


def build_phase_references(
    scene: Scene,
    assignment: Mapping[int, Sequence[int]],
    benchmark: bool = False,
) -> dict[tuple[int, int], PhaseReference]:
    """References for every (receiver, cell), honoring half-duplex."""
    refs: dict[tuple[int, int], PhaseReference] = {}
    for tx_id, cells in assignment.items():
        tx = scene.uav(tx_id)
        receivers = [tx] if benchmark else [u for u in scene.uavs if u.id != tx_id]
        for cell_index in cells:
            center = scene.grid.cells[cell_index].center
            for rx in receivers:
                refs[(rx.id, cell_index)] = phase_reference(scene, tx, rx, center)
    return refs


def local_statistic(block: SymbolBlock, ref: PhaseReference) -> complex:
    """Phase-compensated coherent sum of a data-free frame."""
    return complex(ref.doppler_phasors @ block.values @ ref.delay_phasors)


def raw_statistic(received: SymbolBlock, frame: SymbolBlock, ref: PhaseReference) -> complex:
    """Data-weighted variant: conj(transmitted) applied instead of division."""
    return complex(
        ref.doppler_phasors @ (frame.values.conj() * received.values) @ ref.delay_phasors
    )


def compute_statistics(
    store: SampleStore, refs: Mapping[tuple[int, int], PhaseReference]
) -> dict[tuple[int, int], complex]:
    return {key: local_statistic(block, refs[key]) for key, block in store.blocks.items()}


def _mle_scale(scene: Scene) -> float:
    wave = scene.wave
    return (
        (1.0 / (wave.symbols * wave.subcarriers)) ** 2
        * _FOUR_PI_CUBED
        / (scene.array.element_count * scene.tx_power_w * scene.wavelength**2)
    )


def central_mle_rcs(
    stats: Sequence[complex],
    rx_distances: Sequence[float],
    tx_distance: float,
    scene: Scene,
) -> float:
    """Central ML cross-section estimate from several receivers' statistics.

    Receivers are combined with pathloss weights d^(-a/2); the estimate is
    the squared modulus of the weighted stack, normalized by the summed
    pathloss and the coherent processing gain.
    """
    if len(stats) == 0:
        raise ValueError("at least one receiver statistic is required")
    if len(stats) != len(rx_distances):
        raise ValueError("statistics and distances must align")
    alpha = scene.pathloss_exponent
    d_rx = np.asarray(rx_distances, dtype=float)
    weights = d_rx ** (-alpha / 2.0)
    stacked = complex(np.sum(weights * np.asarray(stats, dtype=complex)))
    norm = float(np.sum(d_rx ** (-alpha)))
    return (
        _mle_scale(scene)
        * tx_distance**alpha
        * abs(stacked) ** 2
        / norm**2
    )


def central_mle_rcs_raw(
    raw_stats: Sequence[complex],
    symbol_energies: Sequence[float],
    rx_distances: Sequence[float],
    tx_distance: float,
    scene: Scene,
) -> float:
    """Central estimate from data-weighted statistics and symbol energies.

    Cross-check path: identical to ``central_mle_rcs`` whenever the
    transmitted constellation is unit-modulus.
    """
    if len(raw_stats) == 0:
        raise ValueError("at least one receiver statistic is required")
    alpha = scene.pathloss_exponent
    d_rx = np.asarray(rx_distances, dtype=float)
    stacked = complex(np.sum(d_rx ** (-alpha / 2.0) * np.asarray(raw_stats, dtype=complex)))
    norm = float(np.sum(d_rx ** (-alpha) * np.asarray(symbol_energies, dtype=float)))
    return (
        _FOUR_PI_CUBED
        * tx_distance**alpha
        / (scene.array.element_count * scene.tx_power_w * scene.wavelength**2)
        * abs(stacked) ** 2
        / norm**2
    )


def local_mle_from_stat(
    stat: complex, tx_distance: float, rx_distance: float, scene: Scene
) -> float:
    """Single-receiver ML cross-section from one statistic."""
    alpha = scene.pathloss_exponent
    return (
        _mle_scale(scene)
        * tx_distance**alpha
        * rx_distance**alpha
        * abs(stat) ** 2
    )


def local_mle_rcs(block: SymbolBlock, ref: PhaseReference, scene: Scene) -> float:
    """Single-receiver ML cross-section straight from a data-free frame."""
    stat = local_statistic(block, ref)
    return local_mle_from_stat(stat, ref.tx_distance, ref.rx_distance, scene)


@dataclass
class RcsMap:
    """Per-cell nonnegative cross-section estimates over a grid.

    ``observed`` marks cells the map owner actually heard; unobserved
    cells hold zero (a receiving UAV never hears its own illuminated
    cells).
    """

    grid: GridSpec
    values: np.ndarray
    observed: np.ndarray
    provenance: str

    def __post_init__(self) -> None:
        if self.values.shape != (self.grid.cell_count,):
            raise ValueError("map values must align with the grid cells")
        if np.any(self.values < 0):
            raise ValueError("cross-section estimates must be nonnegative")

    def argmax_cell(self) -> int:
        if not np.any(self.observed):
            raise ValueError("map has no observed cells")
        masked = np.where(self.observed, self.values, -np.inf)
        return int(np.argmax(masked))


def local_map_from_stats(
    stats: Mapping[tuple[int, int], complex],
    rx_uav: int,
    refs: Mapping[tuple[int, int], PhaseReference],
    scene: Scene,
    assignment: Mapping[int, Sequence[int]],
) -> RcsMap:
    """One receiver's map: local MLE per heard cell, zeros where half-duplex."""
    grid = scene.grid
    values = np.zeros(grid.cell_count)
    observed = np.zeros(grid.cell_count, dtype=bool)
    own = set(assignment.get(rx_uav, ()))
    for (rx, cell), stat in stats.items():
        if rx != rx_uav:
            continue
        ref = refs[(rx, cell)]
        values[cell] = local_mle_from_stat(stat, ref.tx_distance, ref.rx_distance, scene)
        observed[cell] = True
    assert not (observed & np.isin(np.arange(grid.cell_count), list(own))).any()
    return RcsMap(grid=grid, values=values, observed=observed, provenance=f"local-u{rx_uav}")


def build_local_map(
    store: SampleStore,
    rx_uav: int,
    refs: Mapping[tuple[int, int], PhaseReference],
    scene: Scene,
) -> RcsMap:
    """Compute a receiver's local map directly from its stored frames."""
    stats = {
        (rx, cell): local_statistic(block, refs[(rx, cell)])
        for (rx, cell), block in store.blocks.items()
        if rx == rx_uav
    }
    return local_map_from_stats(stats, rx_uav, refs, scene, store.assignment)


def fuse_mure(maps: Sequence[RcsMap]) -> RcsMap:
    """Information-level fusion: cellwise mean of the local maps."""
    if len(maps) == 0:
        raise ValueError("at least one local map is required")
    grid = maps[0].grid
    for m in maps[1:]:
        if m.grid is not grid and (
            m.grid.cell_count != grid.cell_count
            or m.grid.side_length != grid.side_length
            or m.grid.grid_kind != grid.grid_kind
        ):
            raise ValueError("local maps were built on different grids")
    values = np.mean([m.values for m in maps], axis=0)
    observed = np.any([m.observed for m in maps], axis=0)
    return RcsMap(grid=grid, values=values, observed=observed, provenance=PROVENANCE_MURE)


def fuse_mimore(
    stats: Mapping[tuple[int, int], complex],
    assignment: Mapping[int, Sequence[int]],
    refs: Mapping[tuple[int, int], PhaseReference],
    scene: Scene,
) -> RcsMap:
    """Central map: per-cell ML estimate over all non-illuminating receivers."""
    if len(scene.uavs) < 2:
        raise ValueError("central fusion requires at least two UAVs")
    grid = scene.grid
    values = np.zeros(grid.cell_count)
    observed = np.zeros(grid.cell_count, dtype=bool)
    by_cell: dict[int, list[tuple[int, complex]]] = {}
    for (rx, cell), stat in stats.items():
        by_cell.setdefault(cell, []).append((rx, stat))
    for cell, entries in by_cell.items():
        entries.sort(key=lambda e: e[0])
        ref0 = refs[(entries[0][0], cell)]
        rx_d = [refs[(rx, cell)].rx_distance for rx, _ in entries]
        values[cell] = central_mle_rcs(
            [s for _, s in entries], rx_d, ref0.tx_distance, scene
        )
        observed[cell] = True
    return RcsMap(grid=grid, values=values, observed=observed, provenance=PROVENANCE_MIMORE)


def fuse_mupe(positions: Sequence[np.ndarray]) -> np.ndarray:
    """Position-level fusion: componentwise mean of local estimates."""
    if len(positions) == 0:
        raise ValueError("at least one position estimate is required")
    fused = np.mean(np.stack([np.asarray(p, dtype=float) for p in positions]), axis=0)
    fused[2] = 0.0
    return fused


def benchmark_map(
    scene: Scene,
    noise: NoiseSpec,
    streams: StreamFactory,
    table: Mapping[tuple[int, int, int], BeamformerPair] | None = None,
    clutter_table: Mapping[tuple[int, int, int], ClutterResponse] | None = None,
    quad: QuadratureConfig = QuadratureConfig(),
    schedule: Schedule | None = None,
) -> RcsMap:
    """Full-duplex single-UAV map: monostatic local MLE over every cell."""
    if len(scene.uavs) != 1:
        raise ValueError("benchmark scene must contain exactly one UAV")
    uav = scene.uavs[0]
    assignment = {uav.id: tuple(range(scene.grid.cell_count))}
    if schedule is None:
        schedule = build_schedule(assignment, scene.grid, benchmark=True)
    if table is None:
        from .beamforming import BeamformerConfig, build_beamformer_table

        table = build_beamformer_table(
            scene, assignment, BeamformerConfig(), quad, benchmark=True
        )
    store = run_campaign(scene, schedule, table, noise, streams, quad, clutter_table)
    refs = build_phase_references(scene, assignment, benchmark=True)
    stats = compute_statistics(store, refs)
    values = np.zeros(scene.grid.cell_count)
    for (rx, cell), stat in stats.items():
        ref = refs[(rx, cell)]
        values[cell] = local_mle_from_stat(stat, ref.tx_distance, ref.rx_distance, scene)
    observed = np.ones(scene.grid.cell_count, dtype=bool)
    return RcsMap(
        grid=scene.grid, values=values, observed=observed, provenance=PROVENANCE_BENCHMARK
    )


def ridge_ratio(rcs_map: RcsMap, target_position: np.ndarray) -> float:
    """Target-cell value over the strongest response far from the target.

    "Far" means at least two cell sizes away in Chebyshev distance. Returns
    NaN when the target cell is not observed by this map, and +inf when no
    far cell carries energy.
    """
    grid = rcs_map.grid
    target = np.asarray(target_position, dtype=float)
    dists = np.linalg.norm(grid.centers[:, :2] - target[None, :2], axis=1)
    target_cell = int(np.argmin(dists))
    if not rcs_map.observed[target_cell]:
        return float("nan")
    cheb = np.max(
        np.abs(grid.centers[:, :2] - grid.centers[target_cell, :2][None, :]), axis=1
    )
    far = rcs_map.observed & (cheb >= 2.0 * grid.cell_size - 1e-9)
    if not np.any(far):
        return float("nan")
    denom = float(np.max(rcs_map.values[far]))
    if denom == 0.0:
        return float("inf")
    return float(rcs_map.values[target_cell]) / denom


# --- plain-text map export -------------------------------------------------

_MAP_HEADER = "# uavsense-rcs-map v1"


def write_rcs_map(path, rcs_map: RcsMap) -> None:
    """Write a map as plain text: metadata header, value rows, mask rows.

    Values appear base layer first (row-major, x fastest), then the overlay
    layer for mixed grids. Full precision is preserved.
    """
    grid = rcs_map.grid
    lines = [
        _MAP_HEADER,
        f"# side_length={grid.side_length!r} divisions={grid.base_divisions} "
        f"kind={grid.grid_kind}",
        f"# provenance={rcs_map.provenance}",
    ]
    layouts = [(0, grid.base_divisions, grid.base_divisions)]
    if grid.grid_kind == "mixed":
        layouts.append((grid.base_count, grid.base_divisions - 1, grid.base_divisions - 1))
    for start, rows, cols in layouts:
        for r in range(rows):
            row = rcs_map.values[start + r * cols : start + (r + 1) * cols]
            lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append("# mask")
    for start, rows, cols in layouts:
        for r in range(rows):
            row = rcs_map.observed[start + r * cols : start + (r + 1) * cols]
            lines.append(" ".join("1" if v else "0" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_rcs_map(path) -> RcsMap:
    """Reconstruct a map written by :func:`write_rcs_map`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != _MAP_HEADER:
        raise ValueError(f"{path}: not a uavsense RCS map file")
    meta: dict[str, str] = {}
    for token in lines[1].lstrip("# ").split():
        key, _, val = token.partition("=")
        meta[key] = val
    provenance = lines[2].partition("=")[2]
    grid = build_grid(float(meta["side_length"]), int(meta["divisions"]), meta["kind"])
    body = lines[3:]
    mask_at = body.index("# mask")
    values = np.array([float(v) for row in body[:mask_at] for v in row.split()])
    observed = np.array(
        [v == "1" for row in body[mask_at + 1 :] if row for v in row.split()]
    )
    return RcsMap(grid=grid, values=values, observed=observed, provenance=provenance)
