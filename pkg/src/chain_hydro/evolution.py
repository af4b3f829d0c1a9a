"""Exact evolution of the chain in normal-mode coordinates.

With u_k = <psi^k, p> and v_k = <psi~^k, r> each mode is a harmonic
oscillator,

    u_k(t) = u_k cos(w_k t) - v_k sin(w_k t)
    v_k(t) = v_k cos(w_k t) + u_k sin(w_k t),

so the mean of a Gaussian ensemble rotates and its covariance is conjugated
by the same block-diagonal rotation.  There is no time stepping anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import EigenBasis, MassField
from .gibbs import InitialMoments

__all__ = [
    "ModeState",
    "ModeCovariance",
    "Ensemble",
    "project_state",
    "project_mean",
    "evolve_mode_state",
    "reconstruct",
    "initial_mode_covariance",
    "evolve_covariance",
    "site_thermal_variances",
    "probe_sites",
    "conserved_quantities",
    "mode_energies",
    "mode_invariant_I",
]


@dataclass(frozen=True, eq=False)
class ModeState:
    """Mode amplitudes; ``u`` and ``v`` may carry leading batch axes."""

    u: np.ndarray
    v: np.ndarray
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class ModeCovariance:
    Suu: np.ndarray
    Svv: np.ndarray
    Suv: np.ndarray
    time: float = 0.0

    def block(self) -> np.ndarray:
        """The full 2N x 2N covariance of (u, v)."""
        return np.block([[self.Suu, self.Suv], [self.Suv.T, self.Svv]])

    def thermal_energy(self) -> float:
        return 0.5 * float(np.trace(self.Suu) + np.trace(self.Svv))


def project_state(r, p, basis: EigenBasis) -> ModeState:
    """Mode amplitudes of a configuration (or a batch, along the last axis)."""
    u = np.asarray(p, dtype=float) @ basis.modes
    v = np.asarray(r, dtype=float) @ basis.strain_modes
    return ModeState(u, v, 0.0)


def project_mean(moments: InitialMoments, basis: EigenBasis) -> ModeState:
    return project_state(moments.mean_r, moments.mean_p, basis)


def _rotation(basis: EigenBasis, t: float):
    phase = basis.omegas * t
    c, s = np.cos(phase), np.sin(phase)
    s[0] = 0.0
    c[0] = 1.0
    return c, s


def evolve_mode_state(s: ModeState, basis: EigenBasis, t: float) -> ModeState:
    """Advance by ``t``; the zero mode keeps u_0 fixed and v_0 = 0."""
    c, sn = _rotation(basis, t)
    u = s.u * c - s.v * sn
    v = s.v * c + s.u * sn
    return ModeState(u, v, s.time + t)


def reconstruct(s: ModeState, basis: EigenBasis):
    """Inverse of :func:`project_state`: returns ``(r, p)``."""
    r = s.v @ basis.strain_modes.T
    p = (s.u @ basis.modes.T) * basis.masses
    return r, p


def initial_mode_covariance(moments: InitialMoments, basis: EigenBasis) -> ModeCovariance:
    """Covariance of (u, v) under a product Gaussian with the given site variances."""
    psi, strain = basis.modes, basis.strain_modes
    Suu = psi.T @ (moments.var_p[:, None] * psi)
    Svv = strain.T @ (moments.var_r[:, None] * strain)
    Suu = 0.5 * (Suu + Suu.T)
    Svv = 0.5 * (Svv + Svv.T)
    return ModeCovariance(Suu, Svv, np.zeros_like(Suu), 0.0)


def evolve_covariance(C: ModeCovariance, basis: EigenBasis, t: float) -> ModeCovariance:
    """Conjugate the covariance by the mode rotation over time ``t``.

    With z' = R z and R = [[c, -s], [s, c]] acting diagonally per mode,
    the blocks transform entrywise through outer products of (c, s).
    """
    c, s = _rotation(basis, t)
    cc, ss = np.outer(c, c), np.outer(s, s)
    cs, sc = np.outer(c, s), np.outer(s, c)
    Suu, Svv, Suv = C.Suu, C.Svv, C.Suv
    Svu = Suv.T
    new_uu = cc * Suu - cs * Suv - sc * Svu + ss * Svv
    new_vv = ss * Suu + sc * Suv + cs * Svu + cc * Svv
    new_uv = cs * Suu + cc * Suv - ss * Svu - sc * Svv
    return ModeCovariance(new_uu, new_vv, new_uv, C.time + t)


def probe_sites(n: int, max_probes: int = 256) -> np.ndarray:
    """Every ceil(n / max_probes)-th site (0-based)."""
    step = -(-n // max_probes)
    return np.arange(0, n, step)


def site_thermal_variances(C: ModeCovariance, basis: EigenBasis, sites=None):
    """Per-site variances ``(var_r, var_p)`` of the centred fields.

    ``sites`` (0-based) restricts the contraction to a subset; strain sites
    beyond N-2 are dropped from ``var_r``.  The contraction order is fixed,
    so results are reproducible for a given BLAS build and thread count.
    """
    psi, strain, m = basis.modes, basis.strain_modes, basis.masses
    if sites is None:
        sp, sr = slice(None), slice(None)
    else:
        sites = np.asarray(sites)
        sp, sr = sites, sites[sites < basis.n - 1]
    a = psi[sp]
    var_p = m[sp] ** 2 * np.einsum("xj,xj->x", a @ C.Suu, a)
    b = strain[sr]
    var_r = np.einsum("xj,xj->x", b @ C.Svv, b)
    return np.clip(var_r, 0.0, None), np.clip(var_p, 0.0, None)


def conserved_quantities(r, p, mf: MassField) -> tuple[float, float]:
    """Energy H and the gradient invariant I of a configuration.

    H = (<p, M^-1 p> + <r, r>)/2
    I = (<grad_- r, M^-1 grad_- r> + |grad_+ M^-1 p|^2)/2,  r_0 = r_N = 0
    """
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    m = mf.masses
    H = 0.5 * (np.sum(p**2 / m) + np.sum(r**2))
    grad_r = np.diff(np.concatenate(([0.0], r, [0.0])))
    grad_v = np.diff(p / m)
    I = 0.5 * (np.sum(grad_r**2 / m) + np.sum(grad_v**2))
    return float(H), float(I)


def mode_energies(s: ModeState) -> np.ndarray:
    return 0.5 * (s.u**2 + s.v**2)


def mode_invariant_I(s: ModeState, basis: EigenBasis) -> float:
    """I = (1/2) sum_k w_k^2 (u_k^2 + v_k^2)."""
    return float(0.5 * np.sum(basis.omegas**2 * (s.u**2 + s.v**2)))


class Ensemble:
    """Local Gibbs ensemble of one mass configuration, evolved exactly.

    Holds the projected mean and the initial mode covariance; ``mean_at``
    and ``variances_at`` return real-space moments at any microscopic time.
    """

    def __init__(self, basis: EigenBasis, moments: InitialMoments, covariance: bool = True):
        self.basis = basis
        self.moments = moments
        self.mean0 = project_mean(moments, basis)
        self.cov0 = initial_mode_covariance(moments, basis) if covariance else None

    @property
    def mf(self) -> MassField:
        return self.basis.mf

    def mean_at(self, t: float):
        return reconstruct(evolve_mode_state(self.mean0, self.basis, t), self.basis)

    def covariance_at(self, t: float) -> ModeCovariance:
        if self.cov0 is None:
            raise ValueError("ensemble was built without covariance")
        return evolve_covariance(self.cov0, self.basis, t)

    def variances_at(self, t: float, sites=None):
        return site_thermal_variances(self.covariance_at(t), self.basis, sites)
