import numpy as np
import pytest

from miabsim.metrics import EXPORT_FILES, MetricsBundle, cdf, config_hash, export
from miabsim.simcore import SimConfig, Simulator


def _bundle(**kw):
    base = dict(
        config={"seed": 1}, seed=1, n_slots=40, slot_ms=0.25,
        ue_ids=np.array([10, 11, 12]),
        ue_class=np.array(["pedestrian", "passenger", "passenger"]),
        generated_bits=np.array([30720, 30720, 30720]),
        delivered_bits=np.array([30720, 15360, 0]),
        active_slots=np.array([20, 40, 40]),
        packet_latency_slots=[np.array([1, 2, 3, 4, 5, 6, 7, 8, 9, 10]), np.array([14, 20, 30, 40, 50]),
                              np.array([], dtype=int)],
        mcs_hist={"access": np.array([1, 2, 0]), "backhaul": np.array([0, 0, 5])},
        tx_count={"access": 3, "backhaul": 5}, error_count={"access": 1, "backhaul": 0},
    )
    base.update(kw)
    return MetricsBundle(**base)


def test_cdf_examples():
    assert cdf([1, 2, 3, 4], [0, 1, 2.5, 4, 9]) == [(0.0, 0.0), (1.0, 0.25), (2.5, 0.5), (4.0, 1.0), (9.0, 1.0)]
    assert cdf([5, 5, 5], [5]) == [(5.0, 1.0)]
    with pytest.raises(ValueError):
        cdf([], [1])


def test_cdf_is_monotone():
    rng = np.random.default_rng(0)
    v = rng.normal(size=500)
    f = [y for _, y in cdf(v, np.linspace(-4, 4, 200))]
    assert all(b >= a for a, b in zip(f, f[1:]))


def test_derived_quantities():
    b = _bundle()
    # 30720 bits over 20 slots of 0.25 ms
    assert b.throughput_bps[0] == pytest.approx(30720 / 5e-3)
    assert b.throughput_bps[2] == 0.0
    assert b.delivered_fraction("passenger") == pytest.approx(0.25)
    assert b.generated("pedestrian") == 30720
    assert b.latency_ms("passenger").tolist() == [3.5, 5.0, 7.5, 10.0, 12.5]
    assert b.bler("access") == pytest.approx(1 / 3)
    p90 = b.ue_p90_latency_ms()
    assert p90[0] == pytest.approx(np.percentile(np.arange(1, 11), 90) * 0.25)
    assert np.isinf(p90[2])
    with pytest.raises(KeyError):
        b.mask("cyclist")


def test_latency_definition():
    # created at slot 0, backhaul at slot 8, access delivery at slot 14
    b = _bundle(packet_latency_slots=[np.array([14]), np.array([14]), np.array([14])])
    assert b.latency_ms("pedestrian").tolist() == [3.5]


def test_fraction_above_threshold():
    b = _bundle()
    assert b.fraction_above("pedestrian") == 1.0  # 6.1 Mbit/s
    assert b.fraction_above("passenger") == 0.0


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(config_hash({})) == 16


def test_export_writes_all_files_with_hash(tmp_path):
    b = _bundle()
    paths = export(b, tmp_path / "out")
    assert [p.name for p in paths] == list(EXPORT_FILES)
    for p in paths:
        first = p.read_text().splitlines()[0]
        assert first == f"# config_hash = {b.config_hash}"
    tp = (tmp_path / "out" / "throughput_cdf.csv").read_text().splitlines()
    assert tp[1] == "class,throughput_bps,cdf"
    assert tp[-1].endswith(",1.0")
    mcs = (tmp_path / "out" / "mcs_hist.csv").read_text().splitlines()
    assert mcs[1:] == ["mcs,access,backhaul", "0,1,0", "1,2,0", "2,0,5"]


def test_export_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        export(_bundle(), blocker / "sub")


def test_simulated_export_is_byte_identical(tmp_path):
    cfg = SimConfig(regime="limited", deployment="miab", frame_pattern="no_silence", duration_ms=60.0, seed=4)
    for name in ("a", "b"):
        export(Simulator(cfg).run(), tmp_path / name)
    for f in EXPORT_FILES:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_mcs_histogram_sums_to_transmissions():
    b = Simulator(SimConfig(regime="limited", deployment="miab", frame_pattern="with_silence",
                            duration_ms=60.0, seed=2)).run()
    tot = b.totals()
    assert int(b.mcs_hist["access"].sum()) == tot["access_transmissions"]
    assert int(b.mcs_hist["backhaul"].sum()) == tot["backhaul_transmissions"]
