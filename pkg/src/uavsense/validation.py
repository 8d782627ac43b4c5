"""Quick self-checks behind the ``validate`` CLI subcommand.

Each check is a fast, deterministic invariant or oracle comparison; the
full test suite covers the same ground in depth.
"""

from __future__ import annotations

import math

import numpy as np

from .beamforming import BeamformerConfig, build_beamformer_table
from .channel import QuadratureConfig, Scene, cell_clutter_matrix, total_clutter_matrix
from .estimation import build_phase_references, compute_statistics, fuse_mimore
from .experiments import SimConfig, build_context, run_trial
from .geometry import ArraySpec, Direction, assign_cells, build_grid, place_uavs, steering_vector
from .localization import localize
from .overhead import compute_overhead
from .protocol import build_schedule, run_campaign
from .rng import StreamFactory
from .waveform import NoiseSpec, WaveformSpec, dbm_to_watts


def _toy_scene(num_uavs: int = 4, ground_rcs: float = 10.0) -> Scene:
    grid = build_grid(40.0, 4, "mixed")
    return Scene(
        grid=grid,
        uavs=place_uavs(num_uavs, 40.0, 60.0),
        array=ArraySpec(4),
        wave=WaveformSpec(4, 16, 200e6),
        target_position=np.array([12.0, 23.0, 0.0]),
        target_rcs=10.0,
        ground_rcs=ground_rcs,
        carrier_hz=24e9,
        tx_power_w=1.0,
    )


def check_grid_counts() -> None:
    assert build_grid(50.0, 18, "mixed").cell_count == 18**2 + 17**2
    assert build_grid(50.0, 12, "mixed").cell_count == 12**2 + 11**2
    assert build_grid(50.0, 5, "base").cell_count == 25


def check_steering_boresight() -> None:
    for n in (1, 4, 16, 64):
        g = steering_vector(ArraySpec(n), Direction(0.3, 0.0))
        assert np.allclose(g, 1.0), "boresight steering must be all ones"


def check_assignment_partition() -> None:
    grid = build_grid(50.0, 6, "mixed")
    uavs = place_uavs(9, 50.0, 100.0)
    assignment = assign_cells(grid, uavs)
    combined = sorted(i for cells in assignment.values() for i in cells)
    assert combined == list(range(grid.cell_count))


def check_beamformer_constraints() -> None:
    scene = _toy_scene()
    assignment = assign_cells(scene.grid, scene.uavs)
    table = build_beamformer_table(scene, assignment, BeamformerConfig())
    for pair in table.values():
        power = float(np.vdot(pair.w_tx, pair.w_tx).real)
        assert abs(power - scene.tx_power_w) < 1e-12
        assert abs(pair.chi_rx - 1.0) < 1e-10
        expected = math.sqrt(scene.array.element_count * scene.tx_power_w)
        assert abs(pair.chi_tx - expected) / expected < 1e-12


def check_clutter_conservation() -> None:
    scene = _toy_scene(num_uavs=4)
    tx, rx = scene.uavs[0], scene.uavs[1]
    quad = QuadratureConfig(subdivisions=2)
    total = total_clutter_matrix(scene, tx, rx, k=0, quad=quad).value
    summed = sum(
        cell_clutter_matrix(scene, tx, rx, c, k=0, quad=quad).value
        for c in scene.grid.base_cells()
    )
    denom = np.linalg.norm(total)
    assert np.linalg.norm(total - summed) <= 1e-10 * denom


def check_noiseless_recovery() -> None:
    scene = _toy_scene(ground_rcs=0.0)
    target = scene.grid.cells[5].center
    scene = scene.with_target(target)
    assignment = assign_cells(scene.grid, scene.uavs)
    schedule = build_schedule(assignment, scene.grid)
    table = build_beamformer_table(scene, assignment, BeamformerConfig())
    store = run_campaign(scene, schedule, table, NoiseSpec(0.0), StreamFactory(7))
    refs = build_phase_references(scene, assignment)
    stats = compute_statistics(store, refs)
    rcs_map = fuse_mimore(stats, assignment, refs, scene)
    assert abs(rcs_map.values[5] - scene.target_rcs) / scene.target_rcs < 1e-6
    estimate = localize(rcs_map, 1.0)
    assert np.allclose(estimate.position, target)


def check_overhead_formulas() -> None:
    r = compute_overhead("cs", 196, 16, 16, 64, 4)
    assert r.tx_bits == 64 * 16 * 64 * 4 * 196
    assert r.rx_bits == 16 * r.tx_bits
    assert compute_overhead("mupe", 196, 16, 16, 64, 4).tx_bits == 64
    assert compute_overhead("mimore", 7, 3, 2, 2, 4).tx_bits == 64 * 7
    assert compute_overhead("mure", 7, 3, 2, 2, 4).tx_bits == 32 * 7


def check_trial_determinism() -> None:
    cfg = SimConfig(
        base_divisions=4,
        num_uavs=4,
        array_elements=4,
        symbols=4,
        subcarriers=8,
        trials=1,
        methods=("mimore", "benchmark"),
    )
    ctx = build_context(cfg)
    a = run_trial(ctx, 0)
    b = run_trial(ctx, 0)
    assert a.errors == b.errors and np.array_equal(a.target, b.target)


def check_power_conversion() -> None:
    assert abs(dbm_to_watts(30.0) - 1.0) < 1e-12
    assert abs(dbm_to_watts(-109.0) - 10 ** (-10.9) * 1e-3) < 1e-25


CHECKS = [
    ("grid cell counts", check_grid_counts),
    ("steering boresight", check_steering_boresight),
    ("assignment partition", check_assignment_partition),
    ("beamformer constraints", check_beamformer_constraints),
    ("clutter conservation", check_clutter_conservation),
    ("noiseless target recovery", check_noiseless_recovery),
    ("overhead formulas", check_overhead_formulas),
    ("trial determinism", check_trial_determinism),
    ("dBm conversion", check_power_conversion),
]
