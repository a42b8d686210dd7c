"""Pilot and jamming symbol vectors, received-signal synthesis, SINR and the
hidden-node interference process."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import MultipathChannel


@dataclass(frozen=True)
class Simplified:
    """Constant jamming symbol ``f`` repeated over the whole pilot."""

    f: complex | None = None  # None: unit-modulus symbol with random phase per draw


@dataclass(frozen=True)
class PiecewiseUnknown:
    """M distinct jamming symbols sent in contiguous blocks.

    ``counts`` gives the block lengths; by default the pilot is split as
    evenly as possible with earlier blocks taking the remainder.
    """

    symbols: tuple[complex, ...] | None = None
    m_distinct: int = 2
    counts: tuple[int, ...] | None = None

    @property
    def m(self) -> int:
        return len(self.symbols) if self.symbols is not None else self.m_distinct


JammingForm = Simplified | PiecewiseUnknown


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise plus hidden-node collisions.

    ``sigma_n2`` is the per-sample noise power. ``covariance`` overrides the
    white ``sigma_n2 * I`` covariance. ``interference_power`` is the extra
    noise power a hidden-node collision adds for one step.
    """

    sigma_n2: float = 0.0
    covariance: np.ndarray | None = None
    hidden_node_count: int = 0
    collision_prob_per_node: float = 0.01
    interference_power: float = 0.0

    def __post_init__(self):
        if self.sigma_n2 < 0:
            raise ValueError("sigma_n2 must be >= 0")
        if self.hidden_node_count < 0:
            raise ValueError("hidden_node_count must be >= 0")
        if not 0.0 <= self.collision_prob_per_node <= 1.0:
            raise ValueError("collision_prob_per_node must be a probability")
        if self.covariance is not None:
            c = np.asarray(self.covariance)
            if c.ndim != 2 or c.shape[0] != c.shape[1] or not np.allclose(c, c.conj().T):
                raise ValueError("covariance must be a square Hermitian matrix")
            if np.linalg.eigvalsh(c).min() <= 0:
                raise ValueError("covariance must be positive definite")

    def cov(self, k_len: int) -> np.ndarray:
        if self.covariance is not None:
            c = np.asarray(self.covariance, dtype=complex)
            if c.shape != (k_len, k_len):
                raise ValueError(f"covariance shape {c.shape} does not match K={k_len}")
            return c
        return self.sigma_n2 * np.eye(k_len)

    def collision_probability(self) -> float:
        return 1.0 - (1.0 - self.collision_prob_per_node) ** self.hidden_node_count


@dataclass(frozen=True)
class Received:
    """Aggregate received vector ``y`` (K) and delay-resolved view (K x N)."""

    y: np.ndarray
    resolved: np.ndarray


def make_pilot(k_len: int) -> np.ndarray:
    if k_len < 1:
        raise ValueError(f"pilot length must be >= 1, got {k_len}")
    return np.ones(k_len, dtype=complex)


def block_counts(m: int, k_len: int, counts: Sequence[int] | None = None) -> list[int]:
    if counts is not None:
        counts = list(counts)
        if len(counts) != m or sum(counts) != k_len or min(counts) < 1:
            raise ValueError(f"block counts {counts} do not tile K={k_len} with M={m}")
        return counts
    if m > k_len:
        raise ValueError(f"pattern of {m} symbols is longer than K={k_len}")
    base, extra = divmod(k_len, m)
    return [base + (1 if i < extra else 0) for i in range(m)]


def pattern_labels(m: int, k_len: int, counts: Sequence[int] | None = None) -> np.ndarray:
    """Group index of every sample for a block pattern."""
    return np.repeat(np.arange(m), block_counts(m, k_len, counts))


def _unit(z: complex) -> complex:
    if z == 0:
        raise ValueError("jamming symbol must be nonzero")
    return z / abs(z)


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, n))


def make_jamming(form: JammingForm, k_len: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Jamming symbol vector of length ``k_len``, unit modulus per sample."""
    if k_len < 1:
        raise ValueError(f"jamming length must be >= 1, got {k_len}")
    if isinstance(form, Simplified):
        f = _unit(form.f) if form.f is not None else _random_unit(rng, 1)[0]
        return np.full(k_len, f, dtype=complex)
    if isinstance(form, PiecewiseUnknown):
        if form.symbols is not None:
            symbols = np.array([_unit(s) for s in form.symbols])
        else:
            symbols = _random_unit(rng, form.m_distinct)
        labels = pattern_labels(len(symbols), k_len, form.counts)
        return symbols[labels]
    raise TypeError(f"unknown jamming form {form!r}")


def synthesize_received(
    h1: MultipathChannel,
    h2: MultipathChannel,
    x: np.ndarray,
    s: np.ndarray,
    noise: NoiseModel,
    rng: np.random.Generator | None = None,
    extra_noise_power: float = 0.0,
) -> Received:
    """Per-bin observation ``Y[k, l] = h1[l] x[k] + h2[l] s[k] + w[k, l]``.

    Both channels must have the same number of taps; the noise in every delay
    bin is drawn independently with covariance ``C_w + extra_noise_power*I``.
    """
    x = np.asarray(x, dtype=complex)
    s = np.asarray(s, dtype=complex)
    if x.shape != s.shape or x.ndim != 1:
        raise ValueError(f"pilot and jamming lengths differ: {x.shape} vs {s.shape}")
    if h1.n_taps != h2.n_taps:
        raise ValueError(f"tap counts differ: {h1.n_taps} vs {h2.n_taps}")
    k_len, n = x.size, h1.n_taps
    resolved = np.outer(x, h1.gains) + np.outer(s, h2.gains)
    cov = noise.cov(k_len) + extra_noise_power * np.eye(k_len)
    if np.any(cov != 0):
        # circularly-symmetric complex Gaussian: w = L (a + jb)/sqrt(2)
        chol = np.linalg.cholesky(cov)
        white = (rng.standard_normal((k_len, n)) + 1j * rng.standard_normal((k_len, n))) / math.sqrt(2.0)
        resolved = resolved + chol @ white
    return Received(y=resolved.sum(axis=1), resolved=resolved)


def sinr(h1_los_gain: complex, h2_los_gain: complex, noise_power: float) -> float:
    """SINR in dB for unit-power pilot and jamming symbols."""
    signal = abs(h1_los_gain) ** 2
    denom = abs(h2_los_gain) ** 2 + noise_power
    if denom == 0:
        raise ValueError("SINR undefined without interference or noise")
    if signal == 0:
        return -math.inf
    return 10.0 * math.log10(signal / denom)


def hidden_node_interference(noise: NoiseModel, rng: np.random.Generator) -> float:
    """Extra noise power from a hidden-node collision during this step (or 0)."""
    if noise.hidden_node_count == 0:
        return 0.0
    if rng.random() < noise.collision_probability():
        return noise.interference_power
    return 0.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w / 1e-3) if w > 0 else -math.inf


def jammer_senses(sensed_power_w: float, threshold_dbm: float = -86.0) -> bool:
    """Reactive jammer trigger: transmits only above the sensing threshold."""
    return watts_to_dbm(sensed_power_w) > threshold_dbm
