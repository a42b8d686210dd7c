"""Relative Speed Estimation Algorithm: one pilot exchange per step, inverted
through the jammer's LOS path-loss magnitude to a relative speed."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .channel import (
    CarrierConfig,
    MultipathChannel,
    PathLossParams,
    RicianParams,
    doppler_phase,
    los_tap_jx,
    los_tap_tx,
    path_loss,
    synth_multipath,
)
from .estimation import (
    IdentifiabilityError,
    decompose_simplified,
    decompose_unknown,
    extract_los,
    mmse_estimate,
)
from .geometry import VehicleState, true_relative_speed
from .waveform import (
    JammingForm,
    NoiseModel,
    PiecewiseUnknown,
    Simplified,
    hidden_node_interference,
    jammer_senses,
    make_jamming,
    make_pilot,
    pattern_labels,
    synthesize_received,
)


@dataclass(frozen=True)
class RseaConfig:
    """Estimator and link parameters.

    ``nlos.sigma_q`` is the NLOS ray amplitude relative to the LOS tap of the
    same channel. ``detect_factor`` sets the jammer-presence test
    ``|g0|^2 > detect_factor * var(g0)``.
    """

    dt_interval: float = 2.0
    carrier: CarrierConfig = CarrierConfig()
    pathloss: PathLossParams = PathLossParams()
    gamma1: complex = 1.0
    gamma2: complex = 1.0
    n_taps: int = 4
    k_pilot: int | None = None
    jamming: JammingForm = Simplified()
    pattern_known: bool = False
    nlos: RicianParams = RicianParams(k_factor=4.0, sigma_q=0.3)
    tau_max: float = 1e-6
    sensing_threshold_dbm: float = -86.0
    detect_factor: float = 4.0

    def __post_init__(self):
        if self.dt_interval <= 0:
            raise ValueError(f"dt_interval must be > 0, got {self.dt_interval}")
        if self.n_taps < 1:
            raise ValueError(f"n_taps must be >= 1, got {self.n_taps}")
        if self.k_pilot is None:
            object.__setattr__(self, "k_pilot", 2 * self.n_taps + 2)
        if self.k_pilot <= 2 * self.n_taps + 1:
            raise IdentifiabilityError(
                f"k_pilot={self.k_pilot} must exceed 2N+1={2 * self.n_taps + 1}"
            )


@dataclass(frozen=True)
class SpeedEstimate:
    delta_u_hat: float | None
    timestamp: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def present(self) -> bool:
        return self.delta_u_hat is not None


class World(NamedTuple):
    tx: VehicleState
    rx: VehicleState
    jx: VehicleState


def estimate_delta_u(los_baseband: complex, cfg: RseaConfig, timestamp: float = 0.0) -> SpeedEstimate:
    """Invert |h2_los| = |gamma2| g0 (d_ref / (du dt))^n_p for ``du``.

    With the LOS exponent n_p = 2 this is the fourth root of
    gamma2^2 g0^2 d_ref^4 / (dt^4 (a1^2 + b1^2)).
    """
    mag = abs(los_baseband)
    if mag == 0.0:
        return SpeedEstimate(None, timestamp, {"los_magnitude": 0.0})
    p = cfg.pathloss
    ratio = abs(cfg.gamma2) * p.g0 / mag
    if p.n_p == 2.0:
        du = (ratio**2 * p.d_ref**4 / cfg.dt_interval**4) ** 0.25
    else:
        du = p.d_ref * ratio ** (1.0 / p.n_p) / cfg.dt_interval
    return SpeedEstimate(du, timestamp, {"los_magnitude": mag})


def phase_consistency(los_baseband: complex, delta_u_hat: float, cfg: RseaConfig) -> float:
    """Distance on the unit circle between the observed LOS phase and the
    Doppler phase the estimate predicts; lies in [0, 2]."""
    if delta_u_hat <= 0:
        raise ValueError("phase check needs a positive estimate")
    tau = delta_u_hat * cfg.dt_interval / cfg.carrier.c
    omega = doppler_phase(delta_u_hat, tau, cfg.carrier) + float(np.angle(cfg.gamma2))
    observed = float(np.angle(los_baseband))
    return abs(complex(math.cos(observed), math.sin(observed)) - complex(math.cos(omega), math.sin(omega)))


def _nlos_for(los_gain: complex, rp: RicianParams) -> RicianParams:
    return replace(rp, sigma_q=rp.sigma_q * abs(los_gain))


def synthesize_channels(
    world: World, cfg: RseaConfig, rng: np.random.Generator
) -> tuple[MultipathChannel, MultipathChannel, float]:
    """Tx-Rx and Jx-Rx channels for the current geometry, plus the true relative speed.

    The jammer's LOS tap is placed at the distance the estimator's model
    assigns to the current relative speed (``du * dt``).
    """
    d_txrx = (world.tx.position - world.rx.position).norm()
    los1 = los_tap_tx(d_txrx, cfg.pathloss, cfg.gamma1)
    h1 = synth_multipath(cfg.n_taps, los1, _nlos_for(los1.gain, cfg.nlos), rng, cfg.tau_max, 0.0, cfg.carrier)
    du_true = true_relative_speed(world.jx, world.rx).value
    los2 = los_tap_jx(du_true, cfg.dt_interval, cfg.pathloss, cfg.gamma2, cfg.carrier)
    h2 = synth_multipath(
        cfg.n_taps, los2, _nlos_for(los2.gain, cfg.nlos), rng, cfg.tau_max, du_true, cfg.carrier
    )
    return h1, h2, du_true


def jammer_active(world: World, cfg: RseaConfig) -> bool:
    """Whether the jammer hears the Tx pilot above its sensing threshold."""
    d = (world.jx.position - world.tx.position).norm()
    if d == 0.0:
        return True
    return jammer_senses(path_loss(d, cfg.pathloss), cfg.sensing_threshold_dbm)


def rsea_step(
    world: World,
    cfg: RseaConfig,
    noise: NoiseModel,
    rng: np.random.Generator,
    timestamp: float = 0.0,
) -> SpeedEstimate:
    """Run one pilot exchange through synthesis, estimation and inversion."""
    k, n = cfg.k_pilot, cfg.n_taps
    x = make_pilot(k)
    h1, h2, du_true = synthesize_channels(world, cfg, rng)
    active = jammer_active(world, cfg)
    s = make_jamming(cfg.jamming, k, rng) if active else np.zeros(k, dtype=complex)
    interference = hidden_node_interference(noise, rng)
    rec = synthesize_received(h1, h2, x, s, noise, rng, extra_noise_power=interference)

    c_w = noise.cov(k)
    if isinstance(cfg.jamming, Simplified):
        est = mmse_estimate(rec.resolved, x, c_w)
        dec = decompose_simplified(
            est, h1, n, error_var=float(est.error_cov[0, 0].real), detect_factor=cfg.detect_factor
        )
    elif isinstance(cfg.jamming, PiecewiseUnknown):
        est = mmse_estimate(rec.resolved, np.eye(k), c_w)
        pattern = pattern_labels(cfg.jamming.m, k, cfg.jamming.counts) if cfg.pattern_known else None
        dec = decompose_unknown(
            est, h1, n, cfg.jamming.m, pattern=pattern,
            error_var=float(np.real(c_w[0, 0])), detect_factor=cfg.detect_factor,
        )
    else:
        raise TypeError(f"unknown jamming form {cfg.jamming!r}")

    los = extract_los(dec)
    out = estimate_delta_u(los, cfg, timestamp)
    diag = {
        "delta_u_true": du_true,
        "jammer_active": active,
        "jammer_detected": dec.jammer_present,
        "interference_power": interference,
        "h1_los": h1.los.gain,
        "h2_los": h2.los.gain,
        "los_magnitude": abs(los),
        "residual": dec.residual,
    }
    if out.present:
        diag["phase_check"] = phase_consistency(los, out.delta_u_hat, cfg)
    return SpeedEstimate(out.delta_u_hat, timestamp, diag)
