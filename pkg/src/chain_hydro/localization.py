"""Spatial localization of the eigenmodes.

The support test: a mode passes when |psi^k_x| <= N^(-1/gamma) at every site
farther than N^gamma from its centre, the centre being the site of largest
mass-weighted weight m_x (psi^k_x)^2.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import EigenBasis
from .fields import band_cutoff

__all__ = [
    "ModeSupport",
    "mode_support",
    "support_table",
    "support_pass_rate",
    "inverse_participation_ratio",
    "envelope_decay_rates",
    "decay_length",
    "band_average",
    "basis_decay_rates",
    "localization_length_profile",
    "loglog_slope",
]

FLOOR = 1e-13


@dataclass(frozen=True)
class ModeSupport:
    k: int
    center: int              # 1-based site
    interval: tuple[int, int]
    outside_max: float
    ipr: float


def inverse_participation_ratio(vecs) -> np.ndarray:
    """sum psi^4 / (sum psi^2)^2 along the first axis."""
    vecs = np.asarray(vecs, dtype=float)
    return np.sum(vecs**4, axis=0) / np.sum(vecs**2, axis=0) ** 2


def _centers(basis: EigenBasis, ks) -> np.ndarray:
    w = basis.masses[:, None] * basis.modes[:, ks] ** 2
    return np.argmax(w, axis=0)          # 0-based, lowest index on ties


def _outside_max(vecs, centers, half):
    x = np.arange(vecs.shape[0])[:, None]
    outside = np.abs(x - centers[None, :]) > half
    return np.max(np.where(outside, np.abs(vecs), 0.0), axis=0)


def mode_support(basis: EigenBasis, k: int, gamma: float) -> ModeSupport:
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    n = basis.n
    half = n**gamma
    c = int(_centers(basis, [k])[0])
    vec = basis.modes[:, k]
    out = float(_outside_max(vec[:, None], np.array([c]), half)[0])
    a = max(1, int(np.ceil(c + 1 - half)))
    b = min(n, int(np.floor(c + 1 + half)))
    return ModeSupport(int(k), c + 1, (a, b), out, float(inverse_participation_ratio(vec)))


def support_table(basis: EigenBasis, gamma: float, ks=None) -> dict:
    """Vectorised :func:`mode_support` over ``ks`` with the pass flag.

    Returns arrays keyed like the CSV columns (k, omega, center, outside_max,
    ipr, pass).
    """
    n = basis.n
    ks = np.arange(1, n) if ks is None else np.asarray(ks, dtype=int)
    vecs = basis.modes[:, ks]
    centers = _centers(basis, ks)
    out = _outside_max(vecs, centers, n**gamma)
    return {
        "k": ks,
        "omega": basis.omegas[ks],
        "center": centers + 1,
        "outside_max": out,
        "ipr": inverse_participation_ratio(vecs),
        "pass": out <= n ** (-1.0 / gamma),
    }


def support_pass_rate(basis: EigenBasis, alpha: float, gamma: float) -> float:
    """Fraction of modes k in (N^(1-alpha), N-1] whose tails fall below N^(-1/gamma)."""
    if not (0 < alpha and 2 * alpha < gamma < 1):
        raise ValueError(f"need 2*alpha < gamma < 1, got alpha={alpha}, gamma={gamma}")
    n = basis.n
    ks = np.arange(band_cutoff(n, alpha) + 1, n)
    if ks.size == 0:
        return float("nan")
    return float(np.mean(support_table(basis, gamma, ks)["pass"]))


def envelope_decay_rates(vecs, weights=None, floor: float = FLOOR) -> np.ndarray:
    """Least-squares slope of -log|psi_x| against distance from the centre.

    Amplitudes are normalised to their maximum and clamped at ``floor``;
    sites at the floor are left out, except that a vector with no other
    site above the floor keeps its first floor site so the fit is defined.
    The centre maximises ``weights * psi^2`` (uniform weights by default).
    """
    vecs = np.asarray(vecs, dtype=float)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    n = vecs.shape[0]
    wts = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    centers = np.argmax(wts[:, None] * vecs**2, axis=0)
    amp = np.abs(vecs) / np.abs(vecs).max(axis=0)
    logs = np.log(np.maximum(amp, floor))
    d = np.abs(np.arange(n)[:, None] - centers[None, :]).astype(float)
    sel = logs > np.log(floor) + 1e-9
    # single-site vectors: keep the nearest floor site
    lonely = sel.sum(axis=0) < 2
    if np.any(lonely):
        for j in np.flatnonzero(lonely):
            others = np.flatnonzero(~sel[:, j])
            if others.size:
                sel[others[np.argmin(d[others, j])], j] = True
    cnt = sel.sum(axis=0)
    sx = (d * sel).sum(axis=0)
    sy = (logs * sel).sum(axis=0)
    sxx = (d * d * sel).sum(axis=0)
    sxy = (d * logs * sel).sum(axis=0)
    den = cnt * sxx - sx**2
    with np.errstate(invalid="ignore", divide="ignore"):
        slope = (cnt * sxy - sx * sy) / den
    return -np.where(den > 0, slope, 0.0)


def decay_length(vec, weights=None, floor: float = FLOOR) -> float:
    rate = float(envelope_decay_rates(vec, weights, floor)[0])
    return 1.0 / rate if rate > 0 else float("inf")


def band_average(omegas, rates, band_count: int, omega_range=None) -> list[tuple[float, float]]:
    """Pool decay rates into equal-width frequency bands and invert the band means.

    Bands holding fewer than 3 modes are skipped with a warning.
    """
    if band_count < 2:
        raise ValueError("band_count must be at least 2")
    omegas = np.asarray(omegas, dtype=float)
    rates = np.asarray(rates, dtype=float)
    lo, hi = omega_range if omega_range is not None else (0.0, float(omegas.max()))
    edges = np.linspace(lo, hi, band_count + 1)
    out = []
    for i in range(band_count):
        upper = omegas <= edges[i + 1] if i == band_count - 1 else omegas < edges[i + 1]
        sel = (omegas >= edges[i]) & upper
        if sel.sum() < 3:
            warnings.warn(f"band [{edges[i]:.3g}, {edges[i + 1]:.3g}) has {sel.sum()} modes; skipped",
                          stacklevel=2)
            continue
        mean_rate = rates[sel].mean()
        zeta = 1.0 / mean_rate if mean_rate > 0 else float("inf")
        out.append((0.5 * (edges[i] + edges[i + 1]), zeta))
    return out


def basis_decay_rates(basis: EigenBasis):
    """(omega_k, decay rate) for the modes k >= 1."""
    return basis.omegas[1:], envelope_decay_rates(basis.modes[:, 1:], basis.masses)


def localization_length_profile(bases: EigenBasis | Sequence[EigenBasis], band_count: int,
                                omega_range=None) -> list[tuple[float, float]]:
    """Band-averaged localization length against frequency.

    Modes k >= 1 of all replicas are pooled into ``band_count`` equal-width
    frequency bands over ``omega_range`` (default: the whole spectrum);
    see :func:`band_average`.
    """
    if isinstance(bases, EigenBasis):
        bases = [bases]
    pairs = [basis_decay_rates(b) for b in bases]
    omegas = np.concatenate([w for w, _ in pairs])
    rates = np.concatenate([r for _, r in pairs])
    return band_average(omegas, rates, band_count, omega_range)


def loglog_slope(profile) -> float:
    """Least-squares slope of log(zeta) against log(omega)."""
    w, z = np.array(profile, dtype=float).T
    ok = np.isfinite(z) & (z > 0) & (w > 0)
    return float(np.polyfit(np.log(w[ok]), np.log(z[ok]), 1)[0])
