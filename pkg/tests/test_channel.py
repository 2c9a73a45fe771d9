import math

import numpy as np
import pytest

import oracle_38901 as ora
from miabsim.channel import (
    PENETRATION_DB,
    SHADOW_SIGMA,
    ClampCounter,
    LinkClass,
    Scenario,
    antenna_gain,
    block_fading_db,
    classify,
    element_attenuation,
    los_probability,
    los_probability_array,
    los_state,
    path_loss,
    path_loss_array,
    shadowing,
)
from miabsim.scenario import DU_OFFSET, MT_OFFSET, Bus, NodeKind, make_node, seat_offsets
from miabsim.simcore import SimConfig, Simulator

FC = 28.0


def _geometries(rng, n, scenario):
    if scenario is Scenario.INH:
        h_bs = np.full(n, 3.0)
        h_ut = rng.uniform(1.0, 2.5, n)
        d2d = rng.uniform(1.0, 100.0, n)
    else:
        h_bs = np.full(n, 25.0 if scenario is Scenario.UMA else 10.0)
        h_ut = rng.uniform(1.5, 8.0, n)
        d2d = 10.0 ** rng.uniform(1.0, math.log10(5000.0), n)
    return d2d, h_bs, h_ut


@pytest.mark.parametrize("scenario", list(Scenario))
@pytest.mark.parametrize("los", [True, False])
def test_path_loss_matches_oracle(scenario, los):
    rng = np.random.default_rng(int(scenario) * 2 + los)
    d2d, h_bs, h_ut = _geometries(rng, 1000, scenario)
    d3d = np.hypot(d2d, h_bs - h_ut)
    got = path_loss_array(int(scenario), los, d2d, d3d, h_bs, h_ut, FC, clamp=False)
    if scenario is Scenario.UMA:
        want = [ora.uma(los, a, b, c, FC) for a, b, c in zip(d2d, h_bs, h_ut)]
    elif scenario is Scenario.UMI:
        want = [ora.umi(los, a, b, c, FC) for a, b, c in zip(d2d, h_bs, h_ut)]
    else:
        want = [ora.inh(los, d, FC) for d in d3d]
    assert np.max(np.abs(got - np.array(want))) <= 1e-9


def test_uma_los_at_100m_matches_oracle():
    d3d = 100.0
    h_bs, h_ut = 25.0, 1.5
    d2d = math.sqrt(d3d ** 2 - (h_bs - h_ut) ** 2)
    got = path_loss(LinkClass(Scenario.UMA), True, d3d, h_bs, h_ut)
    assert got == pytest.approx(ora.uma(True, d2d, h_bs, h_ut, FC), abs=1e-9)


def test_los_probability_matches_oracle():
    rng = np.random.default_rng(7)
    d = 10.0 ** rng.uniform(0.0, 3.5, 1000)
    h = rng.uniform(1.5, 22.5, 1000)
    err = np.abs(los_probability_array(int(Scenario.UMA), d, h) - [ora.p_los_uma(a, b) for a, b in zip(d, h)])
    assert err.max() <= 1e-12
    err = np.abs(los_probability_array(int(Scenario.UMI), d, 1.5) - [ora.p_los_umi(a) for a in d])
    assert err.max() <= 1e-12
    err = np.abs(los_probability_array(int(Scenario.INH), d, 1.5) - [ora.p_los_inh_mixed(a) for a in d])
    assert err.max() <= 1e-12


def test_umi_los_probability_is_one_up_to_18m():
    assert los_probability(Scenario.UMI, 18.0) == 1.0
    assert los_probability(Scenario.UMI, 5.0) == 1.0
    assert los_probability(Scenario.UMI, 18.5) < 1.0


@pytest.mark.parametrize("scenario", list(Scenario))
@pytest.mark.parametrize("los", [True, False])
def test_path_loss_non_decreasing_in_distance(scenario, los):
    h_bs = {Scenario.UMA: 25.0, Scenario.UMI: 10.0, Scenario.INH: 3.0}[scenario]
    h_ut = 1.5
    d2d = np.linspace(0.5, 3000.0 if scenario is not Scenario.INH else 150.0, 20000)
    d3d = np.hypot(d2d, h_bs - h_ut)
    pl = path_loss_array(int(scenario), los, d2d, d3d, h_bs, h_ut, FC, counter=ClampCounter())
    assert np.all(np.diff(pl) >= -1e-9)


@pytest.mark.parametrize("scenario", list(Scenario))
def test_nlos_never_below_los(scenario):
    rng = np.random.default_rng(3)
    d2d, h_bs, h_ut = _geometries(rng, 2000, scenario)
    d3d = np.hypot(d2d, h_bs - h_ut)
    a = path_loss_array(int(scenario), True, d2d, d3d, h_bs, h_ut, FC, clamp=False)
    b = path_loss_array(int(scenario), False, d2d, d3d, h_bs, h_ut, FC, clamp=False)
    assert np.all(b >= a)


def test_short_distances_are_clamped_and_counted():
    c = ClampCounter()
    near = path_loss_array(int(Scenario.UMA), True, 2.0, math.hypot(2.0, 23.5), 25.0, 1.5, FC, counter=c)
    at_min = path_loss_array(int(Scenario.UMA), True, 10.0, math.hypot(10.0, 23.5), 25.0, 1.5, FC, counter=c)
    assert near == pytest.approx(at_min)
    assert c.count == 1


# -- classification -----------------------------------------------------------

def _bus(bid, center, heading=(1.0, 0.0)):
    return Bus(bid, np.array(center, dtype=float), np.array(heading, dtype=float), np.arange(6))


def _rider_nodes(bus, first_id):
    seats = seat_offsets()
    du_xy = bus.to_world(np.array(DU_OFFSET))[0]
    mt_xy = bus.to_world(np.array(MT_OFFSET))[0]
    pax_xy = bus.to_world(seats[:1])[0]
    du = make_node(first_id, NodeKind.MIAB_DU, du_xy, bus_id=bus.id)
    mt = make_node(first_id + 1, NodeKind.MIAB_MT, mt_xy, bus_id=bus.id)
    pax = make_node(first_id + 2, NodeKind.PASSENGER, pax_xy, bus_id=bus.id)
    return du, mt, pax


@pytest.fixture
def street():
    b1 = _bus(0, (100.0, 5.25))
    b2 = _bus(1, (160.0, 5.25))
    du1, mt1, pax1 = _rider_nodes(b1, 10)
    du2, mt2, pax2 = _rider_nodes(b2, 20)
    donor = make_node(0, NodeKind.MACRO, (70.0, 70.0))
    ped = make_node(1, NodeKind.PEDESTRIAN, (100.0, 8.5))
    return dict(buses=[b1, b2], du1=du1, mt1=mt1, pax1=pax1, du2=du2, mt2=mt2, pax2=pax2, donor=donor, ped=ped)


def test_donor_to_mt_is_uma_without_penetration(street):
    lc = classify(street["donor"], street["mt1"], street["buses"])
    assert lc.scenario is Scenario.UMA
    assert lc.penetration_count == 0 and not lc.forced_nlos


def test_du_to_own_passenger_is_indoor(street):
    lc = classify(street["du1"], street["pax1"], street["buses"])
    assert lc.scenario is Scenario.INH
    assert lc.penetration_count == 0


def test_du_to_other_bus_passenger_crosses_two_bodies(street):
    lc = classify(street["du1"], street["pax2"], street["buses"])
    assert lc.penetration_count == 2
    assert lc.forced_nlos
    assert lc.penetration_db == 2 * PENETRATION_DB


def test_bus_body_links(street):
    b = street["buses"]
    for x, y, sc in [("mt1", "pax1", Scenario.UMI), ("du1", "ped", Scenario.UMI),
                     ("ped", "pax1", Scenario.UMI), ("donor", "du1", Scenario.UMA)]:
        lc = classify(street[x], street[y], b)
        assert lc.scenario is sc
        assert lc.penetration_count == 1 and lc.forced_nlos
    assert classify(street["mt1"], street["ped"], b).scenario is Scenario.UMI


def test_classify_is_symmetric(street):
    names = list(k for k in street if k != "buses")
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            assert classify(street[a], street[b], street["buses"]) == classify(street[b], street[a], street["buses"])


def test_forced_nlos_draw_is_never_los():
    rng = np.random.default_rng(0)
    lc = LinkClass(Scenario.UMI, forced_nlos=True, penetration_count=1)
    assert not any(los_state(lc, rng, 5.0) for _ in range(1000))


# -- shadowing ----------------------------------------------------------------

def test_shadowing_sigma_monte_carlo():
    rng = np.random.default_rng(11)
    x = np.array([shadowing(Scenario.UMA, False, rng) for _ in range(100_000)])
    assert abs(x.std() - SHADOW_SIGMA[Scenario.UMA][1]) <= 0.1
    assert abs(x.mean()) < 0.05


def test_shadowing_zero_displacement_is_identical():
    rng = np.random.default_rng(1)
    first = shadowing(Scenario.UMI, True, rng)
    assert shadowing(Scenario.UMI, True, rng, previous=first, displacement=0.0) == first


def test_shadowing_decorrelates_over_long_displacement():
    rng = np.random.default_rng(2)
    a = np.array([shadowing(Scenario.UMA, False, rng) for _ in range(10_000)])
    b = np.array([shadowing(Scenario.UMA, False, rng, previous=v, displacement=1000.0) for v in a])
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_shadowing_correlation_follows_distance():
    rng = np.random.default_rng(3)
    a = np.array([shadowing(Scenario.UMA, False, rng) for _ in range(20_000)])
    b = np.array([shadowing(Scenario.UMA, False, rng, previous=v, displacement=50.0) for v in a])
    assert np.corrcoef(a, b)[0, 1] == pytest.approx(math.exp(-1.0), abs=0.03)


# -- antennas -----------------------------------------------------------------

def test_macro_boresight_serving_gain():
    m = make_node(0, NodeKind.MACRO, (0.0, 0.0), azimuth=0.0)
    tilt = math.radians(m.antenna.tilt)
    boresight = np.array([math.cos(tilt), 0.0, -math.sin(tilt)])
    assert antenna_gain(m, boresight, serving=True) == pytest.approx(8 + 10 * math.log10(64), abs=1e-9)
    assert antenna_gain(m, boresight, serving=False) == pytest.approx(8.0, abs=1e-9)


def test_omni_ue_gain_is_zero():
    ue = make_node(0, NodeKind.PEDESTRIAN, (0.0, 0.0))
    for d in ([1, 0, 0], [0, -1, 0.3], [0.2, 0.1, -1]):
        assert antenna_gain(ue, np.array(d, dtype=float), serving=False) == 0.0


def test_element_pattern_points():
    assert element_attenuation(90.0, 0.0) == 0.0
    assert element_attenuation(90.0, 32.5) == pytest.approx(-3.0)
    # the 3GPP horizontal cut gives 12 dB at the full beamwidth angle
    assert element_attenuation(90.0, 65.0) == pytest.approx(-12.0)
    assert element_attenuation(90.0, 180.0) == pytest.approx(-30.0)
    assert element_attenuation(0.0, 180.0) == pytest.approx(-30.0)


def test_element_pattern_matches_oracle():
    rng = np.random.default_rng(5)
    th = rng.uniform(0, 180, 1000)
    ph = rng.uniform(-180, 180, 1000)
    got = 8.0 + element_attenuation(th, ph)
    want = [ora.element_db(a, b) for a, b in zip(th, ph)]
    assert np.max(np.abs(got - want)) <= 1e-12


# -- fading and per-run state ----------------------------------------------------

def test_block_fading_has_unit_mean_power():
    rng = np.random.default_rng(4)
    for los in (True, False):
        f = block_fading_db(np.full(200_000, los), rng)
        assert np.mean(10 ** (-f / 10)) == pytest.approx(1.0, abs=0.01)


def test_link_states_respect_invariants_during_a_run():
    cfg = SimConfig(regime="limited", deployment="miab", frame_pattern="no_silence", duration_ms=50, seed=3)
    seen = []

    def check(sim, slot):
        ch = sim.channel
        assert not np.any(ch.los[ch.pen > 0])
        iu = ch.iu
        L = ch.coupling_loss()
        np.testing.assert_array_equal(L, L.T)
        st = ch.link_state(int(iu[0][5]), int(iu[1][5]), serving=True)
        assert st.penetration_db == PENETRATION_DB * st.link_class.penetration_count
        seen.append(slot)

    Simulator(cfg, on_refresh=check).run()
    assert seen


def test_channel_time_series_reproducible():
    cfg = SimConfig(regime="not_limited", deployment="miab", frame_pattern="no_silence", duration_ms=30, seed=8)
    rows = []
    for _ in range(2):
        out = []
        Simulator(cfg, on_refresh=lambda s, t: out.append(s.channel.dump_rows(t)[:200])).run()
        rows.append(out)
    assert rows[0] == rows[1]
