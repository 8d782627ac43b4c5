import math

import numpy as np
import pytest

from uavsense.beamforming import BeamformerConfig, build_beamformer_table
from uavsense.channel import Scene
from uavsense.estimation import (
    RcsMap,
    benchmark_map,
    build_local_map,
    build_phase_references,
    central_mle_rcs,
    central_mle_rcs_raw,
    compute_statistics,
    fuse_mimore,
    fuse_mupe,
    fuse_mure,
    local_mle_from_stat,
    local_mle_rcs,
    local_statistic,
    raw_statistic,
    read_rcs_map,
    ridge_ratio,
    write_rcs_map,
)
from uavsense.geometry import ArraySpec, UavPose, assign_cells, build_grid, place_uavs
from uavsense.protocol import build_schedule, run_campaign
from uavsense.rng import StreamFactory, substream
from uavsense.waveform import DATA_FREE, NoiseSpec, SymbolBlock, WaveformSpec, generate_frame

WAVE = WaveformSpec(16, 64, 200e6)


def make_scene(uavs=None, uav_count=4, ground_rcs=0.0, target_cell=9, divisions=4,
               elements=16, target_rcs=10.0, power=1.0):
    grid = build_grid(50.0, divisions, "mixed")
    if uavs is None:
        uavs = place_uavs(uav_count, 50.0, 100.0)
    return Scene(
        grid=grid,
        uavs=tuple(uavs),
        array=ArraySpec(elements),
        wave=WAVE,
        target_position=grid.cells[target_cell].center,
        target_rcs=target_rcs,
        ground_rcs=ground_rcs,
        carrier_hz=24e9,
        tx_power_w=power,
    )


def full_pipeline(scene, noise_w=0.0, seed=5):
    assignment = assign_cells(scene.grid, scene.uavs)
    schedule = build_schedule(assignment, scene.grid)
    table = build_beamformer_table(scene, assignment, BeamformerConfig())
    store = run_campaign(scene, schedule, table, NoiseSpec(noise_w), StreamFactory(seed))
    refs = build_phase_references(scene, assignment)
    return assignment, store, refs


def test_local_statistic_zero_block():
    refs = build_phase_references(make_scene(), {0: (0,), 1: (), 2: (), 3: ()})
    ref = refs[(1, 0)]
    block = SymbolBlock(values=np.zeros((16, 64), dtype=complex), kind=DATA_FREE)
    assert local_statistic(block, ref) == 0


def test_local_statistic_coherent_sum():
    """An echo exactly at the reference sums to Ms * Nc times its amplitude."""
    scene = make_scene()
    refs = build_phase_references(scene, assign_cells(scene.grid, scene.uavs))
    (key, ref) = next(iter(refs.items()))
    amp = 0.37 - 0.11j
    values = amp * np.outer(ref.doppler_phasors.conj(), ref.delay_phasors.conj())
    block = SymbolBlock(values=values, kind=DATA_FREE)
    delta = local_statistic(block, ref)
    assert abs(delta) == pytest.approx(16 * 64 * abs(amp), rel=1e-12)


def test_local_statistic_global_phase_linearity():
    scene = make_scene()
    refs = build_phase_references(scene, assign_cells(scene.grid, scene.uavs))
    ref = next(iter(refs.values()))
    rng = substream(17)
    values = rng.normal(size=(16, 64)) + 1j * rng.normal(size=(16, 64))
    block = SymbolBlock(values=values, kind=DATA_FREE)
    rotated = SymbolBlock(values=values * np.exp(1j * 0.73), kind=DATA_FREE)
    d0 = local_statistic(block, ref)
    d1 = local_statistic(rotated, ref)
    assert d1 == pytest.approx(d0 * np.exp(1j * 0.73), rel=1e-12)
    assert abs(d1) == pytest.approx(abs(d0), rel=1e-12)


def test_phase_reference_unit_modulus():
    scene = make_scene()
    refs = build_phase_references(scene, assign_cells(scene.grid, scene.uavs))
    for ref in refs.values():
        assert np.allclose(np.abs(ref.delay_phasors), 1.0)
        assert np.allclose(np.abs(ref.doppler_phasors), 1.0)


def test_noiseless_recovery_central_local_and_positions():
    scene = make_scene()
    target_cell = 9
    assignment, store, refs = full_pipeline(scene)
    stats = compute_statistics(store, refs)

    central = fuse_mimore(stats, assignment, refs, scene)
    assert central.values[target_cell] == pytest.approx(10.0, rel=1e-9)
    assert central.argmax_cell() == target_cell

    for uav in scene.uavs:
        local = build_local_map(store, uav.id, refs, scene)
        if local.observed[target_cell]:
            assert local.values[target_cell] == pytest.approx(10.0, rel=1e-9)
            # exhaustive check: target cell is the strongest observed cell
            assert local.argmax_cell() == target_cell


def test_singleton_central_equals_local():
    scene = make_scene()
    assignment, store, refs = full_pipeline(scene)
    (rx, cell), block = next(iter(store.blocks.items()))
    ref = refs[(rx, cell)]
    delta = local_statistic(block, ref)
    central = central_mle_rcs([delta], [ref.rx_distance], ref.tx_distance, scene)
    local = local_mle_rcs(block, ref, scene)
    assert central == pytest.approx(local, rel=1e-12)


def test_raw_path_matches_data_free_path():
    """With unit-modulus symbols the data-weighted estimator is identical."""
    scene = make_scene()
    assignment = assign_cells(scene.grid, scene.uavs)
    refs = build_phase_references(scene, assignment)
    table = build_beamformer_table(scene, assignment, BeamformerConfig())
    from uavsense.signal import synthesize_received
    from uavsense.waveform import remove_data

    key = next(iter(table))
    pair = table[key]
    ref = refs[(key[1], key[2])]
    frame = generate_frame(WAVE, substream(31))
    received = synthesize_received(scene, pair, frame, NoiseSpec(1e-13), substream(32))
    bar = remove_data(received, frame)

    delta = local_statistic(bar, ref)
    raw = raw_statistic(received, frame, ref)
    energy = float(np.sum(np.abs(frame.values) ** 2))
    a = central_mle_rcs([delta], [ref.rx_distance], ref.tx_distance, scene)
    b = central_mle_rcs_raw([raw], [energy], [ref.rx_distance], ref.tx_distance, scene)
    assert a == pytest.approx(b, rel=1e-12)


def test_transmit_power_invariance_noiseless():
    results = []
    for power in (1.0, 4.0):
        scene = make_scene(power=power)
        assignment, store, refs = full_pipeline(scene)
        stats = compute_statistics(store, refs)
        central = fuse_mimore(stats, assignment, refs, scene)
        results.append(central.values[9])
    assert results[0] == pytest.approx(results[1], rel=1e-9)


def test_global_phase_invariance_of_maps():
    scene = make_scene(ground_rcs=25.0)
    assignment, store, refs = full_pipeline(scene, noise_w=1e-13)
    rotated_blocks = {
        key: SymbolBlock(
            values=block.values * (np.exp(1j * 1.234) if key[0] == 1 else 1.0),
            kind=block.kind,
        )
        for key, block in store.blocks.items()
    }
    stats_a = compute_statistics(store, refs)
    store.blocks = rotated_blocks
    stats_b = compute_statistics(store, refs)
    for uav in scene.uavs:
        ma = sorted(
            local_mle_from_stat(s, refs[k].tx_distance, refs[k].rx_distance, scene)
            for k, s in stats_a.items()
            if k[0] == uav.id
        )
        mb = sorted(
            local_mle_from_stat(s, refs[k].tx_distance, refs[k].rx_distance, scene)
            for k, s in stats_b.items()
            if k[0] == uav.id
        )
        assert np.allclose(ma, mb, rtol=1e-12)


def test_maps_nonnegative_under_noise():
    scene = make_scene(ground_rcs=25.0)
    assignment, store, refs = full_pipeline(scene, noise_w=1e-12)
    stats = compute_statistics(store, refs)
    central = fuse_mimore(stats, assignment, refs, scene)
    assert np.all(central.values >= 0)


def test_local_map_mask_matches_assignment():
    scene = make_scene(ground_rcs=25.0)
    assignment, store, refs = full_pipeline(scene, noise_w=1e-13)
    for uav in scene.uavs:
        local = build_local_map(store, uav.id, refs, scene)
        masked = set(np.flatnonzero(~local.observed))
        assert masked == set(assignment[uav.id])
        assert np.all(local.values[~local.observed] == 0)


def test_zero_scene_gives_zero_maps():
    scene = make_scene(ground_rcs=0.0, target_rcs=0.0)
    assignment, store, refs = full_pipeline(scene)
    stats = compute_statistics(store, refs)
    central = fuse_mimore(stats, assignment, refs, scene)
    assert np.all(central.values == 0)
    local = build_local_map(store, scene.uavs[0].id, refs, scene)
    assert np.all(local.values == 0)


def _toy_map(values, observed=None, provenance="local-u0"):
    grid = build_grid(20.0, 2, "base")
    values = np.asarray(values, dtype=float)
    if observed is None:
        observed = np.ones(grid.cell_count, dtype=bool)
    return RcsMap(grid=grid, values=values, observed=np.asarray(observed), provenance=provenance)


def test_fuse_mure_mean_properties():
    m = _toy_map([1.0, 2.0, 3.0, 4.0])
    same = fuse_mure([m, m, m])
    assert np.allclose(same.values, m.values)
    tripled = _toy_map([3.0, 6.0, 9.0, 12.0])
    fused = fuse_mure([m, tripled])
    assert np.allclose(fused.values, [2.0, 4.0, 6.0, 8.0])
    assert np.all(fused.values >= np.minimum(m.values, tripled.values))
    assert np.all(fused.values <= np.maximum(m.values, tripled.values))


def test_fuse_mure_rejects_grid_mismatch():
    a = _toy_map([1.0, 2.0, 3.0, 4.0])
    other_grid = build_grid(30.0, 2, "base")
    b = RcsMap(grid=other_grid, values=np.ones(4), observed=np.ones(4, dtype=bool),
               provenance="local-u1")
    with pytest.raises(ValueError):
        fuse_mure([a, b])


def test_fuse_mimore_u2_equals_stitched_local_maps():
    uavs = (
        UavPose(0, np.array([15.0, 25.0, 90.0])),
        UavPose(1, np.array([35.0, 25.0, 90.0])),
    )
    scene = make_scene(uavs=uavs, ground_rcs=25.0)
    assignment, store, refs = full_pipeline(scene, noise_w=1e-13)
    stats = compute_statistics(store, refs)
    central = fuse_mimore(stats, assignment, refs, scene)
    local0 = build_local_map(store, 0, refs, scene)
    local1 = build_local_map(store, 1, refs, scene)
    stitched = np.where(local0.observed, local0.values, local1.values)
    assert np.allclose(central.values, stitched, rtol=1e-12)


def test_fuse_mimore_requires_two_uavs():
    scene = make_scene(uavs=place_uavs(1, 50.0, 100.0))
    with pytest.raises(ValueError):
        fuse_mimore({}, {0: (0,)}, {}, scene)


def test_fuse_mimore_invariant_to_stat_ordering():
    scene = make_scene(ground_rcs=25.0)
    assignment, store, refs = full_pipeline(scene, noise_w=1e-13)
    stats = compute_statistics(store, refs)
    shuffled = dict(reversed(list(stats.items())))
    a = fuse_mimore(stats, assignment, refs, scene)
    b = fuse_mimore(shuffled, assignment, refs, scene)
    assert np.array_equal(a.values, b.values)


def test_fuse_mupe_mean_and_hull():
    a = np.array([0.0, 0.0, 0.0])
    b = np.array([2.0, 2.0, 0.0])
    assert np.allclose(fuse_mupe([a, a]), a)
    assert np.allclose(fuse_mupe([a, b]), [1.0, 1.0, 0.0])
    pts = [np.array([x, y, 0.0]) for x, y in [(0, 0), (4, 0), (0, 4)]]
    fused = fuse_mupe(pts)
    assert fused[0] >= 0 and fused[1] >= 0 and fused[0] + fused[1] <= 4


def test_benchmark_map_recovers_target():
    scene = make_scene(uavs=place_uavs(1, 50.0, 100.0))
    result = benchmark_map(scene, NoiseSpec(0.0), StreamFactory(8))
    assert result.values[9] == pytest.approx(10.0, rel=1e-9)
    assert result.argmax_cell() == 9
    assert np.all(result.observed)


def test_benchmark_map_zero_scene():
    scene = make_scene(uavs=place_uavs(1, 50.0, 100.0), ground_rcs=0.0, target_rcs=0.0)
    result = benchmark_map(scene, NoiseSpec(0.0), StreamFactory(8))
    assert np.all(result.values == 0)


def test_central_mle_rejects_empty():
    scene = make_scene()
    with pytest.raises(ValueError):
        central_mle_rcs([], [], 100.0, scene)


def test_ridge_ratio_basic():
    grid = build_grid(50.0, 5, "base")  # 10 m cells
    values = np.zeros(grid.cell_count)
    values[0] = 8.0   # target cell at (5, 5)
    values[6] = 6.0   # (15, 15): one cell-diagonal over, inside the near zone
    values[24] = 2.0  # (45, 45): four cells away, the far peak
    m = RcsMap(grid=grid, values=values, observed=np.ones(grid.cell_count, dtype=bool),
               provenance="x")
    assert ridge_ratio(m, grid.cells[0].center) == pytest.approx(8.0 / 2.0)
    # unobserved target cell: no ratio
    masked = np.ones(grid.cell_count, dtype=bool)
    masked[0] = False
    m2 = RcsMap(grid=grid, values=values * masked, observed=masked, provenance="x")
    assert math.isnan(ridge_ratio(m2, grid.cells[0].center))


def test_map_round_trip_through_text(tmp_path):
    scene = make_scene(ground_rcs=25.0)
    assignment, store, refs = full_pipeline(scene, noise_w=1e-13)
    local = build_local_map(store, 0, refs, scene)
    path = tmp_path / "map.txt"
    write_rcs_map(path, local)
    loaded = read_rcs_map(path)
    assert loaded.provenance == local.provenance
    assert loaded.grid.cell_count == local.grid.cell_count
    assert np.array_equal(loaded.observed, local.observed)
    assert np.allclose(loaded.values, local.values, rtol=0, atol=1e-12)


def test_read_rcs_map_rejects_other_files(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("not a map\n")
    with pytest.raises(ValueError):
        read_rcs_map(path)
