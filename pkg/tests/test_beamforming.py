import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavsense.beamforming import (
    BeamformerConfig,
    LOADING_FLOOR,
    adaptive_loading,
    build_beamformer_table,
    rx_beamformer,
    tx_beamformer,
    _mvdr_weights,
)
from uavsense.channel import QuadratureConfig, Scene
from uavsense.geometry import ArraySpec, Direction, assign_cells, build_grid, place_uavs, steering_vector
from uavsense.waveform import WaveformSpec


def make_scene(uav_count=4, elements=16, ground_rcs=25.0, divisions=4):
    return Scene(
        grid=build_grid(50.0, divisions, "mixed"),
        uavs=place_uavs(uav_count, 50.0, 100.0),
        array=ArraySpec(elements),
        wave=WaveformSpec(8, 16, 200e6),
        target_position=np.array([20.0, 20.0, 0.0]),
        target_rcs=10.0,
        ground_rcs=ground_rcs,
        carrier_hz=24e9,
        tx_power_w=1.0,
    )


def random_direction(rng):
    return Direction(rng.uniform(-np.pi, np.pi), rng.uniform(0, np.pi / 2))


def test_tx_boresight_constant_entries():
    w = tx_beamformer(ArraySpec(16), Direction(0.0, 0.0), 1.0)
    assert np.allclose(w, 0.25)


def test_tx_power_and_gain_constraints():
    rng = np.random.default_rng(11)
    arr = ArraySpec(16)
    for _ in range(50):
        power = rng.uniform(0.05, 20.0)
        d = random_direction(rng)
        w = tx_beamformer(arr, d, power)
        g = steering_vector(arr, d)
        assert abs(np.vdot(w, w).real - power) / power < 1e-12
        gain = np.vdot(w, g)
        assert abs(gain - math.sqrt(16 * power)) / math.sqrt(16 * power) < 1e-12


def test_rx_zero_interference_is_matched_filter():
    g = steering_vector(ArraySpec(16), Direction(0.4, 0.6))
    w = rx_beamformer(np.zeros((16, 16), dtype=complex), np.ones(16), g)
    assert np.allclose(w, g / 16.0)


def test_rx_distortionless_over_random_draws():
    rng = np.random.default_rng(5)
    arr = ArraySpec(16)
    for _ in range(100):
        g = steering_vector(arr, random_direction(rng))
        x = rng.normal(size=16) + 1j * rng.normal(size=16)
        x *= rng.uniform(1e-9, 1e3)
        w = _mvdr_weights(x, g, adaptive_loading(x, 16))
        assert abs(np.vdot(w, g) - 1.0) < 1e-10


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31), scale=st.floats(min_value=-8, max_value=3))
def test_mvdr_objective_never_beats_matched_filter_backwards(seed, scale):
    """Interference leakage through the Capon weights never exceeds the
    matched filter's leakage (it minimizes the loaded objective among all
    distortionless vectors with no larger norm)."""
    rng = np.random.default_rng(seed)
    n = 16
    arr = ArraySpec(n)
    g = steering_vector(arr, random_direction(rng))
    x = (rng.normal(size=n) + 1j * rng.normal(size=n)) * 10.0**scale
    w = _mvdr_weights(x, g, adaptive_loading(x, n))
    mvdr_obj = abs(np.vdot(w, x)) ** 2
    mf_obj = abs(np.vdot(g / n, x)) ** 2
    assert mvdr_obj <= mf_obj


def test_mvdr_scale_invariance():
    rng = np.random.default_rng(9)
    arr = ArraySpec(16)
    g = steering_vector(arr, random_direction(rng))
    x = rng.normal(size=16) + 1j * rng.normal(size=16)
    kappa = adaptive_loading(x, 16)
    w1 = _mvdr_weights(x, g, kappa)
    for c in (1e-4, 7.0, 1e5):
        w2 = _mvdr_weights(math.sqrt(c) * x, g, c * kappa)
        assert np.allclose(w1, w2, rtol=1e-12)


def test_aligned_interference_reduces_to_matched_filter():
    """Interference proportional to the look steering cannot be nulled:
    the distortionless constraint pins the response, so the solution is the
    matched filter and the objective ties exactly."""
    rng = np.random.default_rng(21)
    arr = ArraySpec(16)
    g = steering_vector(arr, random_direction(rng))
    x = (0.3 - 1.1j) * g
    kappa = 1e-6 * float(np.vdot(x, x).real)
    w = _mvdr_weights(x, g, kappa)
    assert np.allclose(w, g / 16.0, atol=1e-12)
    assert abs(np.vdot(w, g) - 1.0) < 1e-10
    assert abs(np.vdot(w, x)) ** 2 == pytest.approx(abs(np.vdot(g / 16, x)) ** 2, rel=1e-9)


def test_misaligned_interference_strictly_improves():
    rng = np.random.default_rng(22)
    arr = ArraySpec(16)
    g = steering_vector(arr, random_direction(rng))
    x = rng.normal(size=16) + 1j * rng.normal(size=16)
    kappa = 1e-6 * float(np.vdot(x, x).real)
    w = _mvdr_weights(x, g, kappa)
    assert abs(np.vdot(w, x)) ** 2 < 0.01 * abs(np.vdot(g / 16, x)) ** 2


def test_adaptive_loading_floor():
    assert adaptive_loading(np.zeros(4, dtype=complex), 4) == LOADING_FLOOR


def test_config_validation():
    with pytest.raises(ValueError):
        BeamformerConfig(power_w=0.0)
    with pytest.raises(ValueError):
        BeamformerConfig(loading=-1.0)
    with pytest.raises(ValueError):
        BeamformerConfig(interference_mode="other")


def test_table_covers_assignment_and_chi_values():
    scene = make_scene()
    assignment = assign_cells(scene.grid, scene.uavs)
    table = build_beamformer_table(scene, assignment, BeamformerConfig())
    uav_ids = [u.id for u in scene.uavs]
    expected_keys = {
        (tx, rx, cell)
        for tx in uav_ids
        for rx in uav_ids
        if rx != tx
        for cell in assignment[tx]
    }
    assert set(table.keys()) == expected_keys
    root_np = math.sqrt(scene.array.element_count * scene.tx_power_w)
    for pair in table.values():
        assert abs(pair.chi_rx - 1.0) < 1e-10
        assert abs(pair.chi_tx - root_np) / root_np < 1e-12
        assert abs(np.vdot(pair.w_tx, pair.w_tx).real - scene.tx_power_w) < 1e-12


def test_table_benchmark_mode_pairs_self():
    scene = make_scene(uav_count=1)
    assignment = {0: tuple(range(scene.grid.cell_count))}
    table = build_beamformer_table(scene, assignment, BeamformerConfig(), benchmark=True)
    assert set(table.keys()) == {(0, 0, c) for c in range(scene.grid.cell_count)}


def test_exact_mode_differs_from_simplified_but_same_constraints():
    scene = make_scene(divisions=3)
    assignment = assign_cells(scene.grid, scene.uavs)
    quad = QuadratureConfig(2)
    simp = build_beamformer_table(
        scene, assignment, BeamformerConfig(interference_mode="simplified"), quad
    )
    exact = build_beamformer_table(
        scene, assignment, BeamformerConfig(interference_mode="exact"), quad
    )
    key = next(iter(simp))
    assert not np.allclose(simp[key].w_rx, exact[key].w_rx)
    for pair in exact.values():
        assert abs(pair.chi_rx - 1.0) < 1e-10


def test_zero_ground_gives_matched_filter_table():
    """No interference leaves each receive beamformer at g/N, whose squared
    norm is exactly 1/N."""
    scene = make_scene(ground_rcs=0.0)
    assignment = assign_cells(scene.grid, scene.uavs)
    table = build_beamformer_table(scene, assignment, BeamformerConfig())
    n = scene.array.element_count
    for pair in table.values():
        assert np.vdot(pair.w_rx, pair.w_rx).real == pytest.approx(1.0 / n, rel=1e-12)
        assert np.allclose(np.abs(pair.w_rx), 1.0 / n)
