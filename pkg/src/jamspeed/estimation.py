"""Combined channel/jamming estimation from pilot receptions.

The receiver observes every delay bin separately (K x N). A generalized
least-squares (MMSE) fit gives the combined estimate per bin; subtracting the
known Tx-Rx channel leaves the jammer's channel times its symbols, which is
then split into a channel estimate and unit-modulus symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import MultipathChannel


class IdentifiabilityError(ValueError):
    """The pilot design cannot separate the unknowns."""


class AmbiguityError(ValueError):
    """Jamming symbol groups cannot be told apart."""


@dataclass(frozen=True)
class CombinedEstimate:
    """GLS solution ``z`` (P x N), its error covariance (P x P) and the number
    of observations it was fitted from."""

    z: np.ndarray
    error_cov: np.ndarray
    n_obs: int


@dataclass(frozen=True)
class LosDecomposition:
    h1_los: complex
    jamming_baseband: np.ndarray
    s_hat: np.ndarray
    h2_los_hat: complex
    h2_hat: np.ndarray
    residual: float
    jammer_present: bool = True


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return a[:, None] if a.ndim == 1 else a


def mmse_estimate(y, x_design, c_w=None) -> CombinedEstimate:
    """(X^H C^-1 X)^-1 X^H C^-1 y, column by column when ``y`` is K x N.

    ``c_w=None`` or an all-zero covariance falls back to ordinary least squares
    and reports a zero error covariance.
    """
    y2 = _as_2d(y)
    x = _as_2d(x_design)
    k_len, p = x.shape
    if y2.shape[0] != k_len:
        raise ValueError(f"observation has {y2.shape[0]} rows, design has {k_len}")
    if np.linalg.matrix_rank(x) < p:
        raise IdentifiabilityError(
            f"design matrix ({k_len}x{p}) is rank deficient: needs full column rank"
        )
    noiseless = c_w is None or not np.any(c_w)
    c_w = np.eye(k_len) if noiseless else np.asarray(c_w, dtype=complex)
    ci_x = np.linalg.solve(c_w, x)
    ci_y = np.linalg.solve(c_w, y2)
    gram = x.conj().T @ ci_x
    z = np.linalg.solve(gram, x.conj().T @ ci_y)
    err = np.zeros_like(gram) if noiseless else np.linalg.inv(gram)
    if np.ndim(y) == 1:
        z = z[:, 0]
    return CombinedEstimate(z=z, error_cov=err, n_obs=k_len)


def _h1_gains(h1_known, n_taps: int) -> np.ndarray:
    g = h1_known.gains if isinstance(h1_known, MultipathChannel) else np.atleast_1d(
        np.asarray(h1_known, dtype=complex)
    )
    if g.size != n_taps:
        raise ValueError(f"h1 has {g.size} taps, expected {n_taps}")
    return g


def _absent(h1: np.ndarray, k_len: int, n_taps: int) -> LosDecomposition:
    return LosDecomposition(
        h1_los=complex(h1[0]),
        jamming_baseband=np.zeros(k_len, dtype=complex),
        s_hat=np.zeros(k_len, dtype=complex),
        h2_los_hat=0j,
        h2_hat=np.zeros(n_taps, dtype=complex),
        residual=0.0,
        jammer_present=False,
    )


def decompose_simplified(
    z_resolved,
    h1_known,
    n_taps: int,
    k_pilot: int | None = None,
    error_var: float = 0.0,
    detect_factor: float = 0.0,
) -> LosDecomposition:
    """Split per-bin estimates under a constant jamming symbol.

    The jamming phase cannot be separated from the jammer channel phase, so
    ``s_hat`` carries the phase of the LOS product and ``h2_los_hat`` comes
    out real and equal to its magnitude.

    The jammer counts as absent when ``|g0|^2 <= detect_factor * error_var``
    (exactly zero with the defaults).
    """
    if isinstance(z_resolved, CombinedEstimate):
        k_pilot = z_resolved.n_obs if k_pilot is None else k_pilot
        z_resolved = z_resolved.z
    # a 1-D input is a single row of per-bin estimates
    z = np.atleast_2d(np.asarray(z_resolved, dtype=complex))
    k_len = z.shape[0] if k_pilot is None else k_pilot
    if k_len <= 2 * n_taps + 1:
        raise IdentifiabilityError(
            f"K={k_len} pilots cannot resolve N={n_taps} taps: need K > 2N+1 = {2 * n_taps + 1}"
        )
    h1 = _h1_gains(h1_known, n_taps)
    g = z.mean(axis=0) - h1
    g0 = g[0]
    if abs(g0) == 0.0 or abs(g0) ** 2 <= detect_factor * error_var:
        return _absent(h1, k_len, n_taps)

    s0 = g0 / abs(g0)
    h2_hat = g * np.conj(s0)
    residual = float(np.linalg.norm(z - h1 - g)) if z.shape[0] > 1 else 0.0
    return LosDecomposition(
        h1_los=complex(h1[0]),
        jamming_baseband=np.full(k_len, g0, dtype=complex),
        s_hat=np.full(k_len, s0, dtype=complex),
        h2_los_hat=complex(h2_hat[0]),
        h2_hat=h2_hat,
        residual=residual,
    )


def detect_groups(values, m: int, rtol: float = 1e-9, min_separation: float = 4.0) -> np.ndarray:
    """Label samples by which of ``m`` jamming symbols produced them.

    Exact repeats are grouped directly; otherwise a deterministic k-means
    (farthest-point seeding) is run, and groups whose centroids are not at
    least ``min_separation`` within-group RMS spreads apart raise
    :class:`AmbiguityError`.
    """
    v = np.asarray(values, dtype=complex)
    scale = max(np.abs(v).max(), 1e-300)
    uniques: list[complex] = []
    labels = np.empty(v.size, dtype=int)
    for i, val in enumerate(v):
        for j, u in enumerate(uniques):
            if abs(val - u) <= rtol * scale:
                labels[i] = j
                break
        else:
            uniques.append(val)
            labels[i] = len(uniques) - 1
    if len(uniques) == m:
        return labels
    if len(uniques) < m:
        raise AmbiguityError(f"found {len(uniques)} distinct jamming symbols, expected {m}")

    centroids = [v[0]]
    while len(centroids) < m:
        dist = np.min(np.abs(v[:, None] - np.array(centroids)[None, :]), axis=1)
        centroids.append(v[int(np.argmax(dist))])
    c = np.array(centroids)
    for _ in range(100):
        labels = np.argmin(np.abs(v[:, None] - c[None, :]), axis=1)
        if np.bincount(labels, minlength=m).min() == 0:
            raise AmbiguityError("a jamming symbol group became empty during clustering")
        new_c = np.array([v[labels == j].mean() for j in range(m)])
        if np.allclose(new_c, c, rtol=0, atol=1e-15 * scale):
            break
        c = new_c
    spread = np.sqrt(np.mean(np.abs(v - c[labels]) ** 2))
    gaps = np.abs(c[:, None] - c[None, :])[~np.eye(m, dtype=bool)]
    if gaps.min() < min_separation * spread:
        raise AmbiguityError(
            f"jamming groups overlap: centroid gap {gaps.min():.3g} vs spread {spread:.3g}"
        )
    # relabel by order of first appearance
    order = list(dict.fromkeys(labels.tolist()))
    remap = {old: new for new, old in enumerate(order)}
    return np.array([remap[l] for l in labels])


def decompose_unknown(
    z_resolved,
    h1_known,
    n_taps: int,
    m_distinct: int,
    pattern=None,
    error_var: float = 0.0,
    detect_factor: float = 0.0,
    max_iter: int = 500,
    tol: float = 1e-15,
) -> LosDecomposition:
    """Jointly fit the jammer channel and ``m_distinct`` unit-modulus symbols.

    ``z_resolved`` holds per-sample estimates (K x N). ``pattern`` is the group
    label of each sample; when omitted it is detected from the LOS bin.
    Solves min sum |r[k,l] - h2[l] s[label(k)]|^2 with |s| = 1 by alternating
    exact updates, starting from the dominant singular pair. The common phase
    is fixed so that the LOS jammer tap is real and positive.
    """
    if isinstance(z_resolved, CombinedEstimate):
        z_resolved = z_resolved.z
    z = _as_2d(z_resolved)
    k_len = z.shape[0]
    if k_len < 2 * n_taps + m_distinct + 1:
        raise IdentifiabilityError(
            f"K={k_len} pilots cannot resolve N={n_taps} taps and M={m_distinct} symbols: "
            f"need K >= 2N+M+1 = {2 * n_taps + m_distinct + 1}"
        )
    h1 = _h1_gains(h1_known, n_taps)
    r = z - h1[None, :]
    los_power = np.mean(np.abs(r[:, 0]) ** 2)
    if los_power == 0.0 or los_power <= detect_factor * error_var:
        return _absent(h1, k_len, n_taps)

    labels = detect_groups(r[:, 0], m_distinct) if pattern is None else np.asarray(pattern)
    if labels.shape != (k_len,):
        raise ValueError(f"pattern must label all {k_len} samples")
    counts = np.bincount(labels, minlength=m_distinct).astype(float)
    if counts.size != m_distinct or counts.min() == 0:
        raise AmbiguityError("every jamming symbol group needs at least one sample")

    # group means: G[l, m]
    g_mat = np.stack([r[labels == j].mean(axis=0) for j in range(m_distinct)], axis=1)
    w = np.sqrt(counts)
    u, sv, vh = np.linalg.svd(g_mat * w[None, :], full_matrices=False)
    h2 = u[:, 0] * sv[0]
    s = vh[0] / w
    s = np.where(s == 0, 1.0, s)
    s = s / np.abs(s)
    for _ in range(max_iter):
        h2_new = (g_mat * counts[None, :]) @ np.conj(s) / counts.sum()
        proj = np.conj(h2_new) @ g_mat
        s_new = np.where(proj == 0, s, proj / np.where(proj == 0, 1.0, np.abs(proj)))
        done = np.linalg.norm(h2_new - h2) <= tol * max(np.linalg.norm(h2_new), 1e-300)
        h2, s = h2_new, s_new
        if done:
            break
    rot = np.exp(-1j * np.angle(h2[0]))
    h2 = h2 * rot
    s = s / rot

    s_hat = s[labels]
    residual = float(np.linalg.norm(r - np.outer(s_hat, h2)))
    return LosDecomposition(
        h1_los=complex(h1[0]),
        jamming_baseband=h2[0] * s_hat,
        s_hat=s_hat,
        h2_los_hat=complex(h2[0]),
        h2_hat=h2,
        residual=residual,
    )


def extract_los(decomp: LosDecomposition) -> complex:
    """Ray-optical baseband jammer LOS value ``a1 + b1 j`` (0 when absent)."""
    return decomp.h2_los_hat if decomp.jammer_present else 0j
