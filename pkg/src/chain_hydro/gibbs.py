"""Macroscopic profiles and the product-Gaussian local Gibbs state.

Under the local Gibbs measure the variables are independent Gaussians with

    <p_x> = m_x p(x/N) / m_bar,   Var p_x = m_x / beta(x/N),   x = 1..N
    <r_x> = r(x/N),               Var r_x = 1 / beta(x/N),     x = 1..N-1
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .chain import MassField

__all__ = [
    "Profile",
    "TableProfile",
    "MacroProfiles",
    "InitialMoments",
    "canonical_profiles",
    "equilibrium_profiles",
    "profile_from_spec",
    "load_table",
    "initial_moments",
    "sample_configuration",
]

PROFILE_KINDS = ("constant", "polynomial", "sine", "cosine", "sine_squared")


def _sinpi(x):
    """sin(pi x), exactly zero at integer x."""
    x = np.asarray(x, dtype=float)
    out = np.sin(np.pi * x)
    return np.where(x == np.round(x), 0.0, out)


@dataclass(frozen=True)
class Profile:
    """Closed-form profile on [0, 1].

    kinds and coefficient meaning:

    ``constant``      c0
    ``polynomial``    c0 + c1 y + c2 y^2 + ...
    ``sine``          sum_n c_{n-1} sin(n pi y), n = 1, 2, ...
    ``cosine``        c0 + sum_n c_n cos(n pi y)
    ``sine_squared``  c0 + c1 sin^2(pi y)
    """

    kind: str
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("profile needs at least one coefficient")
        if self.kind == "sine_squared" and len(self.coeffs) != 2:
            raise ValueError("sine_squared takes exactly two coefficients")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        c = self.coeffs
        if self.kind == "constant":
            return np.full_like(y, c[0])
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(y, c)
        if self.kind == "sine":
            return sum(cn * _sinpi(n * y) for n, cn in enumerate(c, start=1))
        if self.kind == "cosine":
            return c[0] + sum(cn * np.cos(n * np.pi * y) for n, cn in enumerate(c[1:], start=1))
        return c[0] + c[1] * _sinpi(y) ** 2

    def derivative(self, y):
        y = np.asarray(y, dtype=float)
        c = self.coeffs
        if self.kind == "constant":
            return np.zeros_like(y)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(y, np.polynomial.polynomial.polyder(c))
        if self.kind == "sine":
            return sum(cn * n * np.pi * np.cos(n * np.pi * y) for n, cn in enumerate(c, start=1))
        if self.kind == "cosine":
            return -sum(cn * n * np.pi * _sinpi(n * y) for n, cn in enumerate(c[1:], start=1))
        return c[1] * np.pi * _sinpi(2 * y)


@dataclass(frozen=True, eq=False)
class TableProfile:
    """Sampled profile, monotone-cubic (PCHIP) interpolated between nodes."""

    y: np.ndarray
    values: np.ndarray
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if y.ndim != 1 or y.shape != v.shape or y.size < 2:
            raise ValueError("table needs two equal-length 1-d columns with at least 2 rows")
        if np.any(np.diff(y) <= 0):
            raise ValueError("table abscissae must be strictly increasing")
        if y[0] > 0 or y[-1] < 1:
            raise ValueError("table must cover [0, 1]")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_interp", PchipInterpolator(y, v))

    def __call__(self, y):
        return self._interp(np.asarray(y, dtype=float))

    def derivative(self, y):
        return self._interp.derivative()(np.asarray(y, dtype=float))


def load_table(path) -> TableProfile:
    """Two-column decimal text file (y, value); ``#`` starts a comment."""
    data = np.loadtxt(Path(path), ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected 2 columns, found {data.shape[1]}")
    return TableProfile(data[:, 0], data[:, 1])


def profile_from_spec(name: str, coeffs: Sequence[float] = ()):
    """Build a profile from a config entry.

    ``name`` is one of the closed-form kinds, or ``table:<path>``.
    """
    if name.startswith("table:"):
        return load_table(name[len("table:"):])
    return Profile(name, tuple(coeffs))


@dataclass(frozen=True)
class MacroProfiles:
    beta: Profile | TableProfile
    r_bar: Profile | TableProfile
    p_bar: Profile | TableProfile

    def beta_min(self, n_grid: int = 4097) -> float:
        return float(np.min(self.beta(np.linspace(0.0, 1.0, n_grid))))

    def validate(self, n_grid: int = 4097, end_tol: float = 1e-12) -> float:
        """Check positivity of beta and r(0) = r(1) = 0; return beta_minus."""
        b_min = self.beta_min(n_grid)
        if not b_min > 0:
            raise ValueError(f"beta must be positive on [0, 1]; min on grid is {b_min}")
        ends = np.abs(self.r_bar(np.array([0.0, 1.0])))
        tol = 0.0 if isinstance(self.r_bar, Profile) else end_tol
        if np.any(ends > tol):
            raise ValueError(f"r_bar must vanish at y=0 and y=1, got {ends.tolist()}")
        return b_min


def canonical_profiles() -> MacroProfiles:
    """beta = 1 + sin^2(pi y)/2, r = 0.3 sin(pi y), p = 0.3 cos(pi y)."""
    return MacroProfiles(
        beta=Profile("sine_squared", (1.0, 0.5)),
        r_bar=Profile("sine", (0.3,)),
        p_bar=Profile("cosine", (0.0, 0.3)),
    )


def equilibrium_profiles(beta: float = 1.0, r_bar: float = 0.0, p_bar: float = 0.0) -> MacroProfiles:
    """Constant-temperature profiles.

    ``r_bar`` must be zero here since the stretch profile vanishes at the ends.
    """
    return MacroProfiles(
        beta=Profile("constant", (beta,)),
        r_bar=Profile("sine", (r_bar,)) if r_bar else Profile("constant", (0.0,)),
        p_bar=Profile("constant", (p_bar,)),
    )


@dataclass(frozen=True, eq=False)
class InitialMoments:
    mean_r: np.ndarray
    mean_p: np.ndarray
    var_r: np.ndarray
    var_p: np.ndarray

    @property
    def n(self) -> int:
        return self.mean_p.size


def initial_moments(profiles: MacroProfiles, mf: MassField) -> InitialMoments:
    profiles.validate()
    n = mf.n
    y_p = np.arange(1, n + 1) / n
    y_r = y_p[:-1]
    m = mf.masses
    beta_p = profiles.beta(y_p)
    return InitialMoments(
        mean_r=np.asarray(profiles.r_bar(y_r), dtype=float),
        mean_p=m * profiles.p_bar(y_p) / mf.m_bar,
        var_r=1.0 / beta_p[:-1],
        var_p=m / beta_p,
    )


def sample_configuration(moments: InitialMoments, seed, size: int | None = None):
    """Independent Gaussian draw(s) ``(r, p)`` from the local Gibbs state.

    With ``size`` the arrays gain a leading sample axis.
    """
    rng = np.random.default_rng(seed)
    shape_r = (moments.n - 1,) if size is None else (size, moments.n - 1)
    shape_p = (moments.n,) if size is None else (size, moments.n)
    r = moments.mean_r + np.sqrt(moments.var_r) * rng.standard_normal(shape_r)
    p = moments.mean_p + np.sqrt(moments.var_p) * rng.standard_normal(shape_p)
    return r, p
