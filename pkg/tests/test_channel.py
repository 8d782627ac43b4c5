import math

import numpy as np
import pytest

from uavsense.channel import (
    QuadratureConfig,
    Scene,
    cell_clutter_matrix,
    interference_matrix,
    point_matrix,
    total_clutter_matrix,
)
from uavsense.geometry import ArraySpec, UavPose, build_grid, place_uavs, steering_vector, direction_to
from uavsense.waveform import WaveformSpec


def make_scene(
    side=50.0,
    divisions=4,
    uav_count=4,
    elements=4,
    ground_rcs=9.0,
    target=(12.0, 31.0, 0.0),
    kind="mixed",
):
    return Scene(
        grid=build_grid(side, divisions, kind),
        uavs=place_uavs(uav_count, side, 100.0),
        array=ArraySpec(elements),
        wave=WaveformSpec(8, 16, 200e6),
        target_position=np.array(target),
        target_rcs=10.0,
        ground_rcs=ground_rcs,
        carrier_hz=24e9,
        tx_power_w=1.0,
    )


def test_zero_rcs_gives_zero_matrix():
    scene = make_scene()
    m = point_matrix(scene, scene.uavs[0], scene.uavs[1], np.array([10.0, 10.0, 0.0]), 0.0)
    assert np.all(m.value == 0)


def test_nadir_monostatic_scalar_matches_closed_form():
    scene = make_scene(uav_count=1, elements=1)
    uav = scene.uavs[0]
    point = np.array([25.0, 25.0, 0.0])  # 100 m straight down
    sigma = 3.7
    m = point_matrix(scene, uav, uav, point, sigma, k=0, symbol_index=0)
    expected = math.sqrt(sigma * scene.wavelength**2 / ((4 * math.pi) ** 3 * 1e8))
    assert m.value.shape == (1, 1)
    assert m.value[0, 0] == pytest.approx(expected, rel=1e-12)


def test_doubling_both_distances_quarters_magnitude():
    low = make_scene(uav_count=1, elements=1)
    point = np.array([25.0, 25.0, 0.0])
    m1 = point_matrix(low, low.uavs[0], low.uavs[0], point, 5.0, k=0)
    high_uav = UavPose(0, np.array([25.0, 25.0, 200.0]))
    high = Scene(
        grid=low.grid,
        uavs=(high_uav,),
        array=low.array,
        wave=low.wave,
        target_position=low.target_position,
        target_rcs=low.target_rcs,
        ground_rcs=low.ground_rcs,
        carrier_hz=low.carrier_hz,
        tx_power_w=low.tx_power_w,
    )
    m2 = point_matrix(high, high_uav, high_uav, point, 5.0, k=0)
    assert abs(m2.value[0, 0]) == pytest.approx(abs(m1.value[0, 0]) / 4.0, rel=1e-12)


def test_point_matrix_is_rank_one():
    scene = make_scene(elements=16)
    m = point_matrix(scene, scene.uavs[0], scene.uavs[2], np.array([7.0, 9.0, 0.0]), 4.0, k=3)
    singular = np.linalg.svd(m.value, compute_uv=False)
    assert singular[1] < 1e-10 * singular[0]


def test_point_matrix_outer_product_structure():
    scene = make_scene(elements=9)
    tx, rx = scene.uavs[0], scene.uavs[1]
    point = np.array([20.0, 5.0, 0.0])
    m = point_matrix(scene, tx, rx, point, 2.0, k=0)
    g_rx = steering_vector(scene.array, direction_to(rx.position, point))
    g_tx = steering_vector(scene.array, direction_to(tx.position, point))
    outer = np.outer(g_rx, g_tx.conj())
    ratio = m.value / outer
    assert np.allclose(ratio, ratio[0, 0])


def test_swap_tx_rx_preserves_frobenius_norm():
    scene = make_scene(elements=16)
    a = point_matrix(scene, scene.uavs[0], scene.uavs[3], np.array([11.0, 41.0, 0.0]), 6.0, k=2)
    b = point_matrix(scene, scene.uavs[3], scene.uavs[0], np.array([11.0, 41.0, 0.0]), 6.0, k=2)
    assert np.linalg.norm(a.value) == pytest.approx(np.linalg.norm(b.value), rel=1e-12)


def test_linearity_in_rcs():
    scene = make_scene()
    point = np.array([30.0, 30.0, 0.0])
    m1 = point_matrix(scene, scene.uavs[0], scene.uavs[1], point, 2.0)
    m4 = point_matrix(scene, scene.uavs[0], scene.uavs[1], point, 8.0)
    assert np.allclose(m4.value, 2.0 * m1.value)


def test_cell_clutter_zero_ground():
    scene = make_scene(ground_rcs=0.0)
    m = cell_clutter_matrix(scene, scene.uavs[0], scene.uavs[1], scene.grid.cells[3])
    assert np.all(m.value == 0)


def test_cell_clutter_single_node_equals_center_term():
    """Q=1 midpoint rule is the cell-center point approximation with d^2 weight."""
    scene = make_scene()
    tx, rx = scene.uavs[0], scene.uavs[2]
    cell = scene.grid.cells[5]
    quad = QuadratureConfig(subdivisions=1)
    m = cell_clutter_matrix(scene, tx, rx, cell, k=4, quad=quad)

    # independent evaluation of the single-center term
    alpha = scene.pathloss_exponent
    d = scene.grid.cell_size
    d_tx = np.linalg.norm(tx.position - cell.center)
    d_rx = np.linalg.norm(cell.center - rx.position)
    delay = (d_tx + d_rx) / scene.light_speed
    density = scene.wavelength * math.sqrt(scene.ground_rcs) / (
        (4 * math.pi) ** 1.5 * scene.grid.side_length**2
    )
    g_rx = steering_vector(scene.array, direction_to(rx.position, cell.center))
    g_tx = steering_vector(scene.array, direction_to(tx.position, cell.center))
    phase = np.exp(-2j * math.pi * delay * scene.wave.subcarrier_spacing_hz * 4)
    expected = (
        density
        * d**2
        * phase
        / (d_tx ** (alpha / 2) * d_rx ** (alpha / 2))
        * np.outer(g_rx, g_tx.conj())
    )
    assert np.allclose(m.value, expected, rtol=1e-12)


def test_quadrature_refinement_converges():
    scene = make_scene(divisions=4, elements=16)
    tx, rx = scene.uavs[1], scene.uavs[2]
    cell = scene.grid.cells[14]
    m8 = cell_clutter_matrix(scene, tx, rx, cell, k=0, quad=QuadratureConfig(8))
    m16 = cell_clutter_matrix(scene, tx, rx, cell, k=0, quad=QuadratureConfig(16))
    rel = np.linalg.norm(m8.value - m16.value) / np.linalg.norm(m8.value)
    assert rel < 0.01


def test_total_equals_sum_of_cells():
    scene = make_scene()
    tx, rx = scene.uavs[0], scene.uavs[1]
    for q in (1, 4):
        quad = QuadratureConfig(q)
        total = total_clutter_matrix(scene, tx, rx, k=2, quad=quad)
        summed = sum(
            cell_clutter_matrix(scene, tx, rx, c, k=2, quad=quad).value
            for c in scene.grid.base_cells()
        )
        assert np.linalg.norm(total.value - summed) <= 1e-12 * np.linalg.norm(total.value)


def test_total_matches_whole_area_quadrature_oracle():
    """Independent oracle: one global midpoint mesh over the whole square."""
    scene = make_scene(divisions=2, elements=4)
    tx, rx = scene.uavs[0], scene.uavs[3]
    q = 4
    total = total_clutter_matrix(scene, tx, rx, k=3, quad=QuadratureConfig(q))

    side = scene.grid.side_length
    nodes_per_axis = scene.grid.base_divisions * q
    step = side / nodes_per_axis
    alpha = scene.pathloss_exponent
    density = scene.wavelength * math.sqrt(scene.ground_rcs) / (
        (4 * math.pi) ** 1.5 * side**2
    )
    acc = np.zeros((4, 4), dtype=complex)
    for iy in range(nodes_per_axis):
        for ix in range(nodes_per_axis):
            p = np.array([(ix + 0.5) * step, (iy + 0.5) * step, 0.0])
            d_tx = np.linalg.norm(tx.position - p)
            d_rx = np.linalg.norm(p - rx.position)
            delay = (d_tx + d_rx) / scene.light_speed
            g_rx = steering_vector(scene.array, direction_to(rx.position, p))
            g_tx = steering_vector(scene.array, direction_to(tx.position, p))
            acc += (
                density
                * step**2
                * np.exp(-2j * math.pi * delay * scene.wave.subcarrier_spacing_hz * 3)
                / (d_tx ** (alpha / 2) * d_rx ** (alpha / 2))
                * np.outer(g_rx, g_tx.conj())
            )
    assert np.linalg.norm(total.value - acc) <= 1e-10 * np.linalg.norm(acc)


def test_exact_interference_is_total_minus_cell():
    scene = make_scene()
    tx, rx = scene.uavs[0], scene.uavs[1]
    quad = QuadratureConfig(2)
    total = total_clutter_matrix(scene, tx, rx, k=1, quad=quad)
    for cell_index in (0, 7, scene.grid.cell_count - 1):
        comp = interference_matrix(scene, tx, rx, cell_index, k=1, mode="exact", quad=quad)
        own = cell_clutter_matrix(scene, tx, rx, scene.grid.cells[cell_index], k=1, quad=quad)
        assert np.allclose(comp.value + own.value, total.value, atol=1e-18)


def test_interference_zero_ground_both_modes():
    scene = make_scene(ground_rcs=0.0)
    for mode in ("exact", "simplified"):
        m = interference_matrix(scene, scene.uavs[0], scene.uavs[1], 3, mode=mode)
        assert np.all(m.value == 0)


def test_interference_rejects_unknown_cell_and_mode():
    scene = make_scene()
    with pytest.raises(ValueError):
        interference_matrix(scene, scene.uavs[0], scene.uavs[1], 10_000)
    with pytest.raises(ValueError):
        interference_matrix(scene, scene.uavs[0], scene.uavs[1], 0, mode="fancy")


def test_simplified_vs_exact_gap_is_finite_and_nonzero():
    """The two interference models differ; record the relative gap."""
    scene = make_scene(divisions=3)
    tx, rx = scene.uavs[0], scene.uavs[2]
    exact = interference_matrix(scene, tx, rx, 4, mode="exact", quad=QuadratureConfig(4))
    simp = interference_matrix(scene, tx, rx, 4, mode="simplified")
    gap = np.linalg.norm(simp.value - exact.value) / np.linalg.norm(exact.value)
    assert math.isfinite(gap) and gap > 0


def test_scene_validation():
    with pytest.raises(ValueError):
        make_scene(ground_rcs=-1.0)
    scene = make_scene()
    with pytest.raises(KeyError):
        scene.uav(99)
