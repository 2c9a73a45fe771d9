import numpy as np
import pytest

from miabsim.scenario import (
    BUS_HEIGHT,
    PITCH,
    PROFILES,
    NodeKind,
    PopulationCounts,
    build_layout,
    build_scene,
    place_base_stations,
    scene_csv_rows,
    seat_offsets,
)


def test_grid_pitch_and_streets():
    lay = build_layout("not_limited")
    assert PITCH == 140.0
    assert lay.n == 3
    np.testing.assert_allclose(lay.street_centers, [0, 140, 280, 420])
    np.testing.assert_allclose(lay.block_centers, [70, 210, 350])
    assert lay.bounds.xmax - lay.bounds.xmin == pytest.approx(434.0)
    assert build_layout("limited").bounds.xmax - build_layout("limited").bounds.xmin == pytest.approx(154.0)


def test_unknown_regime():
    with pytest.raises(ValueError):
        build_layout("suburban")


def test_point_classification():
    lay = build_layout("not_limited")
    assert lay.in_intersection(140, 140)
    assert lay.in_street(140, 70) and not lay.in_intersection(140, 70)
    # sidewalk ring of the first block: 7..10 m from a street centre line
    assert lay.in_sidewalk(8.5, 70)
    assert not lay.in_sidewalk(70, 70)  # inside the block
    assert lay.in_lane(70, 5.25, heading_axis=0)
    assert not lay.in_lane(70, 50, heading_axis=0)


def test_macro_placement():
    lay = build_layout("not_limited")
    nodes = place_base_stations(lay, "only_macros")
    assert [n.kind for n in nodes] == [NodeKind.MACRO] * 3
    c = np.array(lay.center)
    for n in nodes:
        assert np.linalg.norm(n.position[:2] - c) == pytest.approx(50.0)
        assert n.height == 25.0
    nodes = place_base_stations(build_layout("limited"), "macros_picos")
    assert sum(n.kind is NodeKind.MACRO for n in nodes) == 1
    assert sum(n.kind is NodeKind.PICO for n in nodes) == 6


def test_picos_face_the_centre():
    lay = build_layout("not_limited")
    for n in place_base_stations(lay, "macros_picos"):
        if n.kind is NodeKind.PICO:
            to_c = np.array(lay.center) - n.position[:2]
            ang = np.degrees(np.arctan2(to_c[1], to_c[0]))
            assert (ang - n.azimuth + 180) % 360 - 180 == pytest.approx(0.0, abs=1e-9)


def test_entity_profiles():
    assert PROFILES[NodeKind.MACRO].tx_power_dbm == 35.0
    assert PROFILES[NodeKind.MIAB_MT].height == 3.5
    assert PROFILES[NodeKind.MIAB_DU].antenna.tilt == 4.0
    assert PROFILES[NodeKind.MACRO].antenna.array_gain_db == pytest.approx(10 * np.log10(64))
    assert PROFILES[NodeKind.PEDESTRIAN].antenna.array_gain_db == 0.0


def test_seats_inside_bus():
    s = seat_offsets()
    assert s.shape == (12, 2)
    assert np.all(np.abs(s[:, 0]) < 6.0) and np.all(np.abs(s[:, 1]) < 1.275)


def test_population_counts_validation():
    PopulationCounts().check()
    with pytest.raises(ValueError):
        PopulationCounts(buses=5).check()
    with pytest.raises(ValueError):
        PopulationCounts(buses=2, passengers=26, passengers_per_bus=13).check()


@pytest.mark.parametrize("regime", ["not_limited", "limited"])
def test_scene_structure(regime):
    sc = build_scene(regime, "miab", seed=3)
    kinds = [n.kind for n in sc.nodes]
    assert kinds.count(NodeKind.PEDESTRIAN) == 36
    assert kinds.count(NodeKind.PASSENGER) == 36
    assert kinds.count(NodeKind.MIAB_DU) == 6 == kinds.count(NodeKind.MIAB_MT)
    assert [n.id for n in sc.nodes] == list(range(len(sc.nodes)))
    lay = sc.layout
    for bus in sc.buses:
        lo, hi = bus.box()
        assert hi[2] == BUS_HEIGHT
        for p in bus.passenger_nodes + [bus.du_node]:
            pos = sc.nodes[p].position
            assert np.all(pos > lo) and np.all(pos < hi)
        assert sc.nodes[bus.mt_node].height > BUS_HEIGHT
        assert lay.in_lane(*bus.center, heading_axis=int(abs(bus.heading[1]) > 0))
    for n in sc.nodes:
        if n.kind is NodeKind.PEDESTRIAN:
            assert lay.in_sidewalk(*n.position[:2])


def test_population_shared_across_deployments():
    a = build_scene("not_limited", "only_macros", seed=9)
    b = build_scene("not_limited", "miab", seed=9)
    pa = np.array([n.position for n in a.nodes if n.kind.is_ue])
    pb = np.array([n.position for n in b.nodes if n.kind.is_ue])
    np.testing.assert_array_equal(pa, pb)


def test_scene_csv():
    rows = scene_csv_rows(build_scene("limited", "only_macros", seed=0))
    assert rows[0] == "id,kind,x,y,z"
    assert rows[1].startswith("0,macro,")
