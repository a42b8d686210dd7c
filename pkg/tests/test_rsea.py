import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jamspeed.channel import CarrierConfig, PathLossParams, los_tap_jx
from jamspeed.estimation import IdentifiabilityError
from jamspeed.geometry import Role, Vec2, VehicleState
from jamspeed.rsea import RseaConfig, World, estimate_delta_u, phase_consistency, rsea_step
from jamspeed.waveform import NoiseModel, PiecewiseUnknown

UNIT = RseaConfig(pathloss=PathLossParams(g0=1.0, d_ref=100.0), gamma2=1.0, dt_interval=2.0)


def world(du, u_rx=10.0):
    """Jammer trailing the receiver in the same lane, closing at ``du``."""
    rx = VehicleState(Vec2(0, 0), Vec2(u_rx, 0), Role.RX)
    tx = VehicleState(Vec2(-20, 0), Vec2(u_rx, 0), Role.TX)
    jx = VehicleState(Vec2(-35, 0), Vec2(du - u_rx, 0), Role.JX)
    return World(tx, rx, jx)


def test_estimate_examples():
    assert estimate_delta_u(4.0, UNIT).delta_u_hat == pytest.approx(25.0)
    assert estimate_delta_u(1.0, UNIT).delta_u_hat == pytest.approx(50.0)
    assert estimate_delta_u(16.0, UNIT).delta_u_hat == pytest.approx(12.5)
    assert not estimate_delta_u(0j, UNIT).present


def test_estimate_round_trips_los_tap():
    tap = los_tap_jx(25.0, 2.0, UNIT.pathloss, 1.0, UNIT.carrier)
    assert estimate_delta_u(tap.gain, UNIT).delta_u_hat == pytest.approx(25.0, rel=1e-12)


@given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
def test_estimate_decreasing_in_magnitude(a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert estimate_delta_u(lo, UNIT).delta_u_hat > estimate_delta_u(hi, UNIT).delta_u_hat


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_estimate_decreasing_in_dt(a, b):
    if a == b:
        return
    lo, hi = sorted((a, b))
    assert estimate_delta_u(3.0, replace(UNIT, dt_interval=lo)).delta_u_hat > estimate_delta_u(
        3.0, replace(UNIT, dt_interval=hi)
    ).delta_u_hat


@given(st.floats(0.01, 100))
def test_scale_covariance(c):
    base = estimate_delta_u(2.0, UNIT).delta_u_hat
    scaled = replace(UNIT, gamma2=c * UNIT.gamma2)
    assert estimate_delta_u(2.0, scaled).delta_u_hat == pytest.approx(base * math.sqrt(c), rel=1e-12)


def test_phase_consistency():
    tap = los_tap_jx(20.0, 2.0, UNIT.pathloss, 1.0, UNIT.carrier)
    assert phase_consistency(tap.gain, 20.0, UNIT) < 1e-6
    rng = np.random.default_rng(0)
    for z in np.exp(1j * rng.uniform(0, 2 * math.pi, 50)):
        assert 0.0 <= phase_consistency(z, 20.0, UNIT) <= 2.0
    with pytest.raises(ValueError):
        phase_consistency(tap.gain, 0.0, UNIT)


def test_config_identifiability():
    assert RseaConfig(n_taps=4).k_pilot == 10
    with pytest.raises(IdentifiabilityError):
        RseaConfig(n_taps=4, k_pilot=9)
    with pytest.raises(ValueError):
        RseaConfig(dt_interval=0.0)


def test_zero_noise_los_only():
    cfg = RseaConfig(n_taps=1)
    est = rsea_step(world(25.0), cfg, NoiseModel(), np.random.default_rng(0))
    assert est.delta_u_hat == pytest.approx(25.0, abs=1e-6)
    assert est.diagnostics["delta_u_true"] == pytest.approx(25.0)
    assert est.diagnostics["phase_check"] <= 2.0


def test_zero_noise_multipath():
    cfg = RseaConfig(n_taps=4)
    assert cfg.k_pilot == 10
    est = rsea_step(world(17.0), cfg, NoiseModel(), np.random.default_rng(1))
    assert est.delta_u_hat == pytest.approx(17.0, rel=1e-6)


def test_silent_jammer_gives_no_estimate():
    cfg = RseaConfig(sensing_threshold_dbm=100.0)
    est = rsea_step(world(25.0), cfg, NoiseModel(), np.random.default_rng(2))
    assert not est.present
    assert est.diagnostics["jammer_active"] is False


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 40.0), st.sampled_from([1.0, 2.0, 4.0]), st.sampled_from([1, 4]), st.integers(0, 2**31))
def test_round_trip_grid(du, dt, n, seed):
    cfg = RseaConfig(n_taps=n, dt_interval=dt)
    est = rsea_step(world(du), cfg, NoiseModel(), np.random.default_rng(seed))
    assert est.delta_u_hat == pytest.approx(du, rel=1e-6)


@pytest.mark.parametrize("pattern_known", [True, False])
def test_unknown_jamming_round_trip(pattern_known):
    cfg = RseaConfig(n_taps=2, k_pilot=8, jamming=PiecewiseUnknown(m_distinct=2), pattern_known=pattern_known)
    est = rsea_step(world(22.0), cfg, NoiseModel(), np.random.default_rng(3))
    assert est.delta_u_hat == pytest.approx(22.0, rel=1e-6)


def test_estimate_invariant_to_jamming_phase():
    cfg = RseaConfig(n_taps=2)
    a = rsea_step(world(12.0), cfg, NoiseModel(), np.random.default_rng(4)).delta_u_hat
    b = rsea_step(world(12.0), cfg, NoiseModel(), np.random.default_rng(5)).delta_u_hat
    assert a == pytest.approx(b, rel=1e-9)


def test_noisy_estimate_reasonable():
    cfg = RseaConfig(n_taps=4)
    noise = NoiseModel(sigma_n2=1e-22)
    rng = np.random.default_rng(6)
    est = [rsea_step(world(20.0), cfg, noise, rng).delta_u_hat for _ in range(200)]
    est = np.array([e for e in est if e is not None])
    assert est.size > 150
    assert np.median(est) == pytest.approx(20.0, rel=0.1)
