"""Tx-Rx and Jx-Rx channel synthesis: path loss, Doppler shift, LOS taps and
Rician NLOS taps.

Taps are delay-resolved: every ray lands in its own delay bin and the
``delta(t - tau)`` factor of the continuous-time model is a unit weight on
that bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 3.0e8


@dataclass(frozen=True)
class CarrierConfig:
    f_c: float = 5.9e9
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.f_c <= 0 or self.c <= 0:
            raise ValueError("carrier frequency and propagation speed must be > 0")

    @property
    def wavelength(self) -> float:
        return self.c / self.f_c


def free_space_g0(p_tx_w: float, carrier: CarrierConfig, d_ref: float) -> float:
    """Received power (W) at ``d_ref`` under free-space propagation."""
    return p_tx_w * (carrier.wavelength / (4.0 * math.pi * d_ref)) ** 2


@dataclass(frozen=True)
class PathLossParams:
    g0: float = free_space_g0(0.1, CarrierConfig(), 100.0)
    d_ref: float = 100.0
    n_p: float = 2.0

    def __post_init__(self):
        if self.g0 <= 0 or self.d_ref <= 0 or self.n_p < 0:
            raise ValueError(f"invalid path-loss parameters: {self}")


@dataclass(frozen=True)
class RicianParams:
    """NLOS fading parameters.

    ``k_factor`` is the specular-to-scattered power ratio; ``math.inf`` gives
    a purely specular ray.
    """

    k_factor: float = 4.0
    sigma_q: float = 1.0

    def __post_init__(self):
        if self.k_factor < 0 or self.sigma_q < 0:
            raise ValueError(f"invalid Rician parameters: {self}")

    @property
    def gamma_q(self) -> float:
        """Amplitude of the specular component."""
        return self.specular_weight * self.sigma_q

    @property
    def specular_weight(self) -> float:
        if math.isinf(self.k_factor):
            return 1.0
        return math.sqrt(self.k_factor / (self.k_factor + 1.0))

    @property
    def scatter_weight(self) -> float:
        if math.isinf(self.k_factor):
            return 0.0
        return math.sqrt(1.0 / (self.k_factor + 1.0))


@dataclass(frozen=True)
class ChannelTap:
    gain: complex
    delay: float = 0.0
    cos_phi: float = 1.0

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError(f"tap delay must be >= 0, got {self.delay}")
        if not np.isfinite(self.gain):
            raise ValueError("tap gain must be finite")


@dataclass(frozen=True)
class MultipathChannel:
    taps: tuple[ChannelTap, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.taps) < 1:
            raise ValueError("a channel needs at least the LOS tap")
        delays = [t.delay for t in self.taps]
        if any(b < a for a, b in zip(delays, delays[1:])):
            raise ValueError("taps must be sorted by nondecreasing delay")

    @property
    def n_taps(self) -> int:
        return len(self.taps)

    @property
    def los(self) -> ChannelTap:
        return self.taps[0]

    @property
    def gains(self) -> np.ndarray:
        return np.array([t.gain for t in self.taps], dtype=complex)

    @classmethod
    def from_gains(cls, gains) -> MultipathChannel:
        """Channel with the given tap gains on consecutive unit delay bins."""
        return cls(tuple(ChannelTap(complex(g), delay=float(i)) for i, g in enumerate(gains)))


def path_loss(d: float, p: PathLossParams) -> float:
    """g0 * (d_ref / d) ** n_p."""
    if d <= 0:
        raise ValueError(f"path loss undefined for distance {d} <= 0")
    return p.g0 * (p.d_ref / d) ** p.n_p


def doppler_shift(delta_u: float, cfg: CarrierConfig, cos_phi: float = 1.0) -> float:
    """Doppler shift in Hz for relative speed ``delta_u`` (m/s)."""
    if abs(cos_phi) > 1.0:
        raise ValueError(f"cos_phi={cos_phi} outside [-1, 1]")
    return delta_u * cfg.f_c * cos_phi / cfg.c


def doppler_phase(delta_u: float, tau: float, cfg: CarrierConfig, cos_phi: float = 1.0) -> float:
    """Baseband Doppler phase 2*pi*f_D*tau accumulated over a delay ``tau``."""
    return 2.0 * math.pi * doppler_shift(delta_u, cfg, cos_phi) * tau


def los_tap_jx(
    delta_u: float,
    dt_interval: float,
    p: PathLossParams,
    gamma2: complex,
    cfg: CarrierConfig,
) -> ChannelTap:
    """Jammer LOS tap when the jammer sits ``delta_u * dt_interval`` meters away.

    The AOD of the LOS ray is zero, so the full relative speed drives the
    Doppler phase.
    """
    if delta_u <= 0:
        raise ValueError(f"delta_u must be > 0, got {delta_u}")
    if dt_interval <= 0:
        raise ValueError(f"dt_interval must be > 0, got {dt_interval}")
    d = delta_u * dt_interval
    tau = d / cfg.c
    magnitude = abs(gamma2) * path_loss(d, p)
    phase = doppler_phase(delta_u, tau, cfg) + np.angle(gamma2)
    return ChannelTap(gain=magnitude * complex(math.cos(phase), math.sin(phase)), delay=tau)


def los_tap_tx(d_txrx: float, p: PathLossParams, gamma1: complex) -> ChannelTap:
    """Tx-Rx LOS tap; the platoon pair is co-moving so there is no Doppler."""
    gain = complex(gamma1) * path_loss(d_txrx, p)
    return ChannelTap(gain=gain, delay=d_txrx / SPEED_OF_LIGHT)


def rician_tap(rp: RicianParams, los_phase: float, rng: np.random.Generator, size=None):
    """Draw Rician tap gain(s) with total power ``sigma_q ** 2``.

    Returns a complex scalar, or an array when ``size`` is given.
    """
    specular = rp.specular_weight * rp.sigma_q * np.exp(1j * los_phase)
    shape = () if size is None else size
    scatter = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (
        rp.sigma_q / math.sqrt(2.0)
    )
    out = specular + rp.scatter_weight * scatter
    return complex(out) if size is None else out


def synth_multipath(
    n_taps: int,
    los: ChannelTap,
    nlos: RicianParams,
    rng: np.random.Generator,
    tau_max: float = 1e-6,
    delta_u: float = 0.0,
    carrier: CarrierConfig = CarrierConfig(),
) -> MultipathChannel:
    """LOS tap plus ``n_taps - 1`` Rician NLOS rays.

    NLOS excess delays are uniform on (0, tau_max]; each ray gets a random
    AOD, and its specular phase is the carrier plus Doppler phase over its
    path delay.
    """
    if n_taps < 1:
        raise ValueError(f"n_taps must be >= 1, got {n_taps}")
    if n_taps == 1:
        return MultipathChannel((los,))
    n = n_taps - 1
    excess = np.sort(tau_max * (1.0 - rng.random(n)))
    cos_phi = rng.uniform(-1.0, 1.0, n)
    taps = [los]
    for tau_x, cphi in zip(excess, cos_phi):
        tau = los.delay + float(tau_x)
        phase = 2.0 * math.pi * (carrier.f_c + doppler_shift(delta_u, carrier, float(cphi))) * tau
        taps.append(ChannelTap(rician_tap(nlos, phase, rng), delay=tau, cos_phi=float(cphi)))
    return MultipathChannel(tuple(taps))
