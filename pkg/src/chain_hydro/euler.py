"""Spectral solution of the macroscopic Euler system in Lagrangian coordinates.

    d_t r = (1/m_bar) d_y p,    d_t p = d_y r,    r(0,t) = r(1,t) = 0
    e = p^2 / (2 m_bar) + r^2 / 2 + 1/beta(y)

r is expanded in sin(n pi y) and p in cos(n pi y); mode n is a rotation of
(a_n, b_n / sqrt(m_bar)) at angular frequency n pi / sqrt(m_bar).  The
constant cosine coefficient of p never moves.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import fft, integrate

from .gibbs import MacroProfiles

__all__ = [
    "MacroFields",
    "QuadratureError",
    "TruncationWarning",
    "solve_wave",
    "energy_field",
    "limit_field",
    "weak_form_residuals",
    "export_snapshot",
]

K_DEFAULT = 512
K_CAP = 1 << 16
TAIL_WARN = 1e-8
QUAD_TOL = 1e-9


class QuadratureError(RuntimeError):
    pass


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class MacroFields:
    m_bar: float
    sine_coeffs: np.ndarray      # a_n, n = 1..K
    cosine_coeffs: np.ndarray    # b_n, n = 0..K
    beta_profile: object = field(repr=False)
    tail: float = 0.0            # l2 norm of the discarded coefficients

    @property
    def K(self) -> int:
        return self.sine_coeffs.size

    def coefficients_at(self, t: float):
        """Sine coefficients of r and cosine coefficients of p at time t."""
        n = np.arange(1, self.K + 1)
        sq = np.sqrt(self.m_bar)
        w = n * np.pi / sq
        c, s = np.cos(w * t), np.sin(w * t)
        a = self.sine_coeffs
        bt = self.cosine_coeffs[1:] / sq
        a_t = a * c - bt * s
        b_t = (bt * c + a * s) * sq
        return a_t, np.concatenate(([self.cosine_coeffs[0]], b_t))

    def r(self, y, t: float):
        a, _ = self.coefficients_at(t)
        y = np.asarray(y, dtype=float)
        n = np.arange(1, self.K + 1)
        return np.sin(np.pi * np.multiply.outer(y, n)) @ a

    def p(self, y, t: float):
        _, b = self.coefficients_at(t)
        y = np.asarray(y, dtype=float)
        n = np.arange(self.K + 1)
        return np.cos(np.pi * np.multiply.outer(y, n)) @ b

    def mechanical_energy(self, t: float) -> float:
        """Integral of p^2/(2 m_bar) + r^2/2 over [0, 1] by Parseval."""
        a, b = self.coefficients_at(t)
        return float(b[0] ** 2 / (2 * self.m_bar) + np.sum(b[1:] ** 2) / (4 * self.m_bar)
                     + np.sum(a**2) / 4)


def solve_wave(profiles: MacroProfiles, m_bar: float, K: int = K_DEFAULT,
               k_cap: int = K_CAP) -> MacroFields:
    """Expand the initial profiles to order ``K`` on a 4K-interval grid.

    Warns with :class:`TruncationWarning` when the discarded coefficients
    carry more than 1e-8 of the mechanical energy.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > k_cap:
        raise ValueError(f"K={K} exceeds the configured cap {k_cap}")
    L = 4 * K
    y = np.arange(L + 1) / L
    r0 = np.asarray(profiles.r_bar(y), dtype=float)
    p0 = np.asarray(profiles.p_bar(y), dtype=float)
    # trapezoid-rule projections: a_n = 2 int r sin(n pi y), b_n = 2 int p cos(n pi y)
    a_all = fft.dst(r0[1:-1], type=1) / L
    b_all = fft.dct(p0, type=1) / L
    b_all[0] *= 0.5

    a, b = a_all[:K], b_all[:K + 1]
    a_tail, b_tail = a_all[K:], b_all[K + 1:]
    tail = float(np.sqrt(np.sum(a_tail**2) + np.sum(b_tail**2)))
    tail_energy = np.sum(a_tail**2) / 4 + np.sum(b_tail**2) / (4 * m_bar)
    total = tail_energy + np.sum(a**2) / 4 + np.sum(b[1:] ** 2) / (4 * m_bar) + b[0] ** 2 / (2 * m_bar)
    if total > 0 and tail_energy > TAIL_WARN * total:
        warnings.warn(f"truncation at K={K} drops {tail_energy / total:.2e} of the energy",
                      TruncationWarning, stacklevel=2)
    return MacroFields(float(m_bar), a, b, profiles.beta, tail)


def energy_field(fields: MacroFields, y, t: float):
    r = fields.r(y, t)
    p = fields.p(y, t)
    return p**2 / (2 * fields.m_bar) + r**2 / 2 + 1.0 / fields.beta_profile(np.asarray(y, dtype=float))


def _field_fn(fields: MacroFields, which: str):
    which = which.upper()
    if which.endswith("_N"):
        which = which[:-2]
    if which == "R":
        return fields.r
    if which == "P":
        return fields.p
    if which == "E":
        return lambda y, t: energy_field(fields, y, t)
    raise ValueError(f"unknown field {which!r}; expected R, P or E")


def limit_field(fields: MacroFields, f, t: float, which: str, tol: float = QUAD_TOL) -> float:
    """Integral of f(y) times the R, P or E density at time t, by adaptive quadrature."""
    density = _field_fn(fields, which)

    def integrand(y):
        return float(f(y) * density(y, t))

    val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=tol * 0.1, epsrel=0.0, limit=400)
    if not err <= tol:
        raise QuadratureError(f"quadrature error estimate {err:.2e} above {tol:.1e}")
    return float(val)


def weak_form_residuals(fields: MacroFields, f, df, g, dg, t: float, order: int = 40):
    """Residuals of the integral identities, for f vanishing at both ends.

    R(f,t) - R(f,0) + (1/m_bar) int_0^t P(f',s) ds
    P(g,t) - P(g,0) + int_0^t R(g',s) ds

    The time integrals use Gauss-Legendre with ``order`` nodes.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * t * (x + 1.0)
    w = 0.5 * t * w
    int_p = sum(wi * limit_field(fields, df, si, "P") for si, wi in zip(s, w))
    int_r = sum(wi * limit_field(fields, dg, si, "R") for si, wi in zip(s, w))
    res_r = limit_field(fields, f, t, "R") - limit_field(fields, f, 0.0, "R") + int_p / fields.m_bar
    res_p = limit_field(fields, g, t, "P") - limit_field(fields, g, 0.0, "P") + int_r
    return float(res_r), float(res_p)


def export_snapshot(fields: MacroFields, t: float, path, n_points: int = 201) -> None:
    """CSV with columns y, r, p, e on a uniform grid of [0, 1]."""
    y = np.linspace(0.0, 1.0, n_points)
    r, p, e = fields.r(y, t), fields.p(y, t), energy_field(fields, y, t)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y", "r", "p", "e"])
        for row in zip(y, r, p, e):
            writer.writerow([repr(float(v)) for v in row])
