import math
from dataclasses import replace

import numpy as np
import pytest

from jamspeed.channel import path_loss
from jamspeed.scenario import (
    KMH,
    Geometry,
    RunRecord,
    ScenarioConfig,
    SweepParam,
    behavior1_config,
    behavior2_config,
    detect_zones,
    initial_world,
    instantaneous_mae,
    mae,
    overall_mae_percent,
    run_scenario,
    sinr_drop,
    sweep,
    trajectory,
    zone_mae,
)


def rec(t, d=100.0, du=10.0, est=10.0):
    return RunRecord(t=t, delta_u_true=du, delta_u_hat=est, sinr_db=0.0, distance_jx_rx=d, cos_theta=1.0)


def quiet(cfg, n_taps=1):
    return replace(cfg, snr_db=math.inf, hidden_nodes=0, rsea=replace(cfg.rsea, n_taps=n_taps, k_pilot=None))


def test_behavior1_defaults():
    c = behavior1_config()
    assert (c.txrx_speed_kmh, c.jx_max_speed_kmh) == (50.0, 60.0)
    assert c.jx_initial_distance == 300.0 and c.txrx_separation == 20.0
    assert c.step == 2.0 and c.rsea.dt_interval == 2.0
    assert c.rsea.n_taps == 4 and c.rsea.k_pilot == 10
    assert c.rsea.carrier.f_c == 5.9e9 and c.p_tx_mw == 100.0
    assert c.geometry is Geometry.SIDE_ROAD


def test_behavior2_defaults():
    c = behavior2_config()
    assert (c.txrx_speed_kmh, c.jx_max_speed_kmh) == (48.0, 50.0)
    assert c.geometry is Geometry.CROSSROADS and c.merge_angle_deg == 90.0
    assert c.jx_initial_distance == 300.0 and c.rsea.n_taps == 4


@pytest.mark.parametrize(
    "field,value", [("step", -2.0), ("step", 0.0), ("txrx_speed_kmh", 0.0), ("jx_initial_distance", -1.0)]
)
def test_config_validation_names_field(field, value):
    with pytest.raises(ValueError, match=field):
        replace(behavior1_config(), **{field: value})


def test_crossroads_needs_right_angle():
    with pytest.raises(ValueError, match="merge_angle_deg"):
        replace(behavior2_config(), merge_angle_deg=60.0)


def test_step_syncs_rsea_interval():
    assert replace(behavior1_config(), step=1.0).rsea.dt_interval == 1.0


@pytest.mark.parametrize("make", [behavior1_config, behavior2_config])
def test_initial_distance_and_route(make):
    cfg = make()
    world, route = initial_world(cfg)
    assert (world.jx.position - world.rx.position).norm() == pytest.approx(300.0)
    assert route.points[1].y == 0.0 and route.points[1].x == cfg.junction_x
    assert world.jx.speed == 0.0


def test_trajectory_speeds():
    cfg = behavior1_config()
    states = list(trajectory(cfg))
    assert [t for t, _ in states] == pytest.approx(np.arange(0, 41, 2.0))
    for _, w in states:
        assert w.rx.speed == pytest.approx(50 * KMH)
        assert w.jx.speed <= 60 * KMH + 1e-12
    assert states[-1][1].jx.speed == pytest.approx(60 * KMH)


def test_behavior2_leaves_by_exit_road():
    cfg = behavior2_config()
    _, last = list(trajectory(cfg))[-1]
    assert last.jx.velocity.y < 0 and last.jx.position.x == pytest.approx(cfg.exit_x)


def test_zero_noise_los_only_run_exact():
    records = run_scenario(quiet(behavior1_config()))
    assert all(r.delta_u_hat is not None for r in records)
    for r in records:
        assert r.delta_u_hat == pytest.approx(r.delta_u_true, rel=1e-6)
    assert mae(records)[1] < 1e-6


def test_zero_noise_multipath_run_exact():
    records = run_scenario(quiet(behavior2_config(), n_taps=4))
    assert max(abs(r.delta_u_hat - r.delta_u_true) for r in records) < 1e-6


def test_out_of_range_jammer_never_estimates():
    cfg = behavior1_config()
    cfg = replace(cfg, hidden_nodes=0, rsea=replace(cfg.rsea, sensing_threshold_dbm=100.0))
    records = run_scenario(cfg)
    assert all(r.delta_u_hat is None for r in records)
    assert np.ptp([r.sinr_db for r in records]) == pytest.approx(0.0, abs=1e-9)


def test_run_deterministic():
    assert run_scenario(behavior1_config(3)) == run_scenario(behavior1_config(3))
    assert run_scenario(behavior1_config(3)) != run_scenario(behavior1_config(4))


def test_records_time_ordered():
    t = [r.t for r in run_scenario(behavior2_config())]
    assert t == sorted(t)


def test_detect_zones_synthetic():
    def d(t):
        if t <= 5:
            return 30 + 5 * (5 - t)
        if t >= 12:
            return 30 + 5 * (t - 12)
        return 30 - 5 * min(t - 5, 12 - t)

    z = detect_zones([rec(t, d(t), du=t) for t in range(17)])
    assert z.dt_eff == pytest.approx(5.0)
    assert z.black_hole == pytest.approx((5.0, 12.0))
    assert z.peak_t == 16 and z.peak_delta_u == 16


def test_detect_zones_never_inside():
    z = detect_zones([rec(t, 100.0) for t in range(5)])
    assert z.black_hole is None and z.black_hole_duration == 0.0
    with pytest.raises(ValueError):
        detect_zones([])


def test_mae_examples():
    same = [rec(t, est=10.0) for t in range(5)]
    assert mae(same)[1] == 0.0
    off = [rec(t, est=12.0) for t in range(15)]
    series, avg = mae(off, 10)
    assert np.allclose(series, 2.0) and avg == pytest.approx(2.0)
    series, _ = mae([rec(0, est=11.0), rec(1, est=13.0)], 2)
    assert series == pytest.approx([1.0, 2.0])
    assert mae([rec(0, du=20.0, est=15.0)], mode="percent")[1] == pytest.approx(25.0)
    with pytest.raises(ValueError):
        mae(same, 0)
    with pytest.raises(ValueError):
        mae(same, mode="relative")


def test_mae_skips_missing_estimates():
    records = [rec(0, est=12.0), rec(1, est=None), rec(2, est=14.0)]
    series, avg = mae(records, 10)
    assert avg == pytest.approx(3.0)
    assert instantaneous_mae(records) == [2.0, None, 3.0]
    assert math.isnan(mae([rec(0, est=None)])[1])


@pytest.mark.parametrize("make", [behavior1_config, behavior2_config])
def test_behavior_zone_shape(make):
    records = run_scenario(make())
    z = detect_zones(records)
    assert z.black_hole is not None
    assert z.dt_eff <= z.black_hole[0]
    assert z.black_hole[0] <= z.peak_t <= z.black_hole[1]
    assert sinr_drop(records, z) >= 5.0


def test_behavior1_zone_timing():
    z = detect_zones(run_scenario(behavior1_config()))
    assert z.dt_eff == pytest.approx(15.5, abs=3.0)
    assert z.black_hole_duration == pytest.approx(13.5, abs=3.0)


def test_zone_mae_keys():
    records = run_scenario(behavior1_config())
    out = zone_mae(records, detect_zones(records))
    assert set(out) == {"overall", "effective_zone", "black_hole"}
    assert all(v >= 0 for v in out.values())


def test_sweep_baseline_and_shape():
    base = replace(behavior1_config(), duration=10.0)
    res = sweep(SweepParam.HIDDEN_NODES, base, 2, values=[0, 50])
    assert res.values == [0, 50] and len(res.per_seed) == 2
    assert res.mae_percent[0] == pytest.approx(
        np.mean([overall_mae_percent(replace(base, hidden_nodes=0, seed=s)) for s in (0, 1)])
    )
    with pytest.raises(ValueError):
        sweep(SweepParam.HIDDEN_NODES, base, 0)


def test_sweep_applies_speed():
    base = replace(behavior1_config(), duration=4.0)
    res = sweep(SweepParam.JAMMER_MAX_SPEED, base, 1, values=[47.0])
    assert res.values == [47.0] and len(res.mae_percent) == 1


def test_noise_calibration():
    cfg = behavior1_config()
    noise = cfg.noise_model()
    signal = path_loss(cfg.txrx_separation, cfg.rsea.pathloss) ** 2
    assert 10 * math.log10(signal / noise.sigma_n2) == pytest.approx(cfg.snr_db)
    assert noise.interference_power == pytest.approx(noise.sigma_n2 * 10 ** (cfg.interference_to_noise_db / 10))
    assert replace(cfg, snr_db=math.inf).noise_model().sigma_n2 == 0.0
