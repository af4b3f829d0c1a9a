"""Empirical fields of the chain and the diagnostics used to control them.

All functions take a :class:`Snapshot`, the first and second moments of
the ensemble at one microscopic time.  For macroscopic time t that time is
N*t; converting is the caller's job.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .chain import EigenBasis, MassField
from .evolution import Ensemble, ModeCovariance, conserved_quantities, site_thermal_variances

__all__ = [
    "TestFunction",
    "Snapshot",
    "take_snapshot",
    "empirical_field",
    "energy_density",
    "energy_split",
    "BandSplit",
    "band_cutoff",
    "mode_band_split",
    "AprioriSums",
    "apriori_bounds",
    "holder_pairs",
    "holder_modulus",
    "holder_bound",
    "averaging_sums",
    "field_rows",
    "initial_invariants",
]


@dataclass(frozen=True)
class TestFunction:
    """Observable weight f on [0, 1], with its derivative when smooth."""

    f: Callable
    df: Callable | None = None
    kind: str = "C0"

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if self.kind not in ("C0", "C1", "C1_vanishing_ends"):
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        if self.kind != "C0" and self.df is None:
            raise ValueError(f"{self.kind} test function needs a derivative")
        if self.kind == "C1_vanishing_ends":
            ends = np.abs(np.asarray(self.f(np.array([0.0, 1.0])), dtype=float))
            if np.any(ends > 1e-14):
                raise ValueError(f"f must vanish at both ends, got {ends.tolist()}")

    def __call__(self, y):
        return self.f(y)

    @classmethod
    def constant(cls, c: float = 1.0) -> "TestFunction":
        return cls(lambda y: np.full_like(np.asarray(y, dtype=float), c),
                   lambda y: np.zeros_like(np.asarray(y, dtype=float)), "C1")

    @classmethod
    def sine(cls, n: int, amplitude: float = 1.0) -> "TestFunction":
        """amplitude * sin(n pi y); vanishes at both ends."""
        def f(y):
            x = n * np.asarray(y, dtype=float)
            return amplitude * np.where(x == np.round(x), 0.0, np.sin(np.pi * x))
        return cls(f, lambda y: amplitude * n * np.pi * np.cos(n * np.pi * np.asarray(y, dtype=float)),
                   "C1_vanishing_ends")

    @classmethod
    def cosine(cls, n: int, amplitude: float = 1.0) -> "TestFunction":
        return cls(lambda y: amplitude * np.cos(n * np.pi * np.asarray(y, dtype=float)),
                   lambda y: -amplitude * n * np.pi * np.sin(n * np.pi * np.asarray(y, dtype=float)),
                   "C1")


def _weights(f, n: int) -> np.ndarray:
    y = np.arange(1, n + 1) / n
    return np.broadcast_to(np.asarray(f(y), dtype=float), (n,))


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Means (and optionally site variances) of the ensemble at one time.

    ``mean_r`` and ``var_r`` have N-1 entries; r_N is taken to be 0.
    """

    mf: MassField
    mean_r: np.ndarray
    mean_p: np.ndarray
    var_r: np.ndarray | None = None
    var_p: np.ndarray | None = None
    time: float = 0.0

    @property
    def n(self) -> int:
        return self.mf.n

    def _padded_r(self, arr):
        return np.concatenate((arr, [0.0]))


def take_snapshot(ensemble: Ensemble, t: float, variances: bool = True) -> Snapshot:
    """Moments of ``ensemble`` at microscopic time ``t``."""
    r, p = ensemble.mean_at(t)
    vr = vp = None
    if variances:
        vr, vp = ensemble.variances_at(t)
    return Snapshot(ensemble.mf, r, p, vr, vp, t)


def energy_density(snap: Snapshot) -> np.ndarray:
    """<e_x> for x = 1..N."""
    if snap.var_p is None:
        raise ValueError("snapshot has no variances; energy needs second moments")
    m = snap.mf.masses
    r = snap._padded_r(snap.mean_r)
    vr = snap._padded_r(snap.var_r)
    return snap.mean_p**2 / (2 * m) + snap.var_p / (2 * m) + r**2 / 2 + vr / 2


def empirical_field(snap: Snapshot, f, which: str) -> float:
    """(1/N) sum_x f(x/N) <X_x> for X = r, p or e."""
    n = snap.n
    w = _weights(f, n)
    which = which.upper()
    if which in ("R", "R_N"):
        vals = snap._padded_r(snap.mean_r)
    elif which in ("P", "P_N"):
        vals = snap.mean_p
    elif which in ("E", "E_N"):
        vals = energy_density(snap)
    else:
        raise ValueError(f"unknown field {which!r}; expected R_N, P_N or E_N")
    return float(w @ vals / n)


def energy_split(snap: Snapshot, f) -> tuple[float, float]:
    """Mechanical part A_N (squared means) and thermal part F_N (variances)."""
    if snap.var_p is None:
        raise ValueError("snapshot has no variances")
    n = snap.n
    w = _weights(f, n)
    m = snap.mf.masses
    r = snap._padded_r(snap.mean_r)
    vr = snap._padded_r(snap.var_r)
    A = w @ (snap.mean_p**2 / (2 * m) + r**2 / 2) / n
    F = w @ (snap.var_p / (2 * m) + vr / 2) / n
    return float(A), float(F)


class BandSplit(NamedTuple):
    F1: float
    F2: float
    cross: float
    cutoff: int


def band_cutoff(n: int, alpha: float) -> int:
    """Largest k with k <= N^(1-alpha), robust to round-off at exact powers."""
    return int(np.floor(n ** (1.0 - alpha) * (1 + 1e-12)))


def mode_band_split(C: ModeCovariance, basis: EigenBasis, f, alpha: float) -> BandSplit:
    """Thermal sum restricted to low modes k <= N^(1-alpha) and to the rest.

    ``cross`` collects the interference between the two bands, so that
    F1 + F2 + cross equals the full thermal part F_N.
    """
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    n = basis.n
    kc = band_cutoff(n, alpha)
    w = _weights(f, n)
    m = basis.masses

    def thermal(sel):
        Suu = np.zeros_like(C.Suu)
        Svv = np.zeros_like(C.Svv)
        Suu[np.ix_(sel, sel)] = C.Suu[np.ix_(sel, sel)]
        Svv[np.ix_(sel, sel)] = C.Svv[np.ix_(sel, sel)]
        vr, vp = site_thermal_variances(ModeCovariance(Suu, Svv, C.Suv), basis)
        return float(w @ (vp / (2 * m) + np.concatenate((vr, [0.0])) / 2) / n)

    k = np.arange(n)
    low, high = k[k <= kc], k[k > kc]
    F1 = thermal(low)
    F2 = thermal(high) if high.size else 0.0
    F = thermal(k)
    return BandSplit(F1, F2, F - F1 - F2, kc)


class AprioriSums(NamedTuple):
    l2_r: float
    l2_p: float
    h1_r: float
    h1_p: float


def apriori_bounds(snap: Snapshot) -> AprioriSums:
    """sum <r>^2, sum <p>^2, sum <grad_- r>^2 and sum <grad_+ M^-1 p>^2."""
    r = snap.mean_r
    p = snap.mean_p
    m = snap.mf.masses
    grad_r = np.diff(np.concatenate(([0.0], r, [0.0])))
    grad_v = np.diff(p / m)
    return AprioriSums(float(r @ r), float(p @ p), float(grad_r @ grad_r), float(grad_v @ grad_v))


def holder_pairs(n: int, total: int = 1024) -> np.ndarray:
    """Pairs (x, x') of sites in 1..N at separations 1, 2, 4, ..., N/2."""
    scales = 2 ** np.arange(int(np.log2(max(n // 2, 1))) + 1)
    per = max(total // scales.size, 1)
    out = []
    for s in scales:
        starts = np.unique(np.linspace(1, n - s, min(per, n - s)).round().astype(int))
        out.append(np.column_stack((starts, starts + s)))
    return np.vstack(out)


def holder_modulus(snap: Snapshot, pairs=None) -> float:
    """max |Delta <r>| / |Delta x / N|^(1/2) and likewise for <p>/m.

    Sites are 1-based; r_N = 0.  Pairs with x = x' are skipped.
    """
    n = snap.n
    if pairs is None:
        pairs = holder_pairs(n)
    pairs = np.asarray(pairs, dtype=int)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    if pairs.size == 0:
        return 0.0
    r = snap._padded_r(snap.mean_r)
    v = snap.mean_p / snap.mf.masses
    i, j = pairs[:, 0] - 1, pairs[:, 1] - 1
    scale = np.sqrt(np.abs(pairs[:, 1] - pairs[:, 0]) / n)
    return float(max(np.max(np.abs(r[j] - r[i]) / scale), np.max(np.abs(v[j] - v[i]) / scale)))


def holder_bound(I0: float, mf: MassField) -> float:
    """Cauchy-Schwarz bound on the Hoelder modulus from the invariant I.

    sum (grad_- r)^2 <= 2 m_max I and sum (grad_+ M^-1 p)^2 <= 2 I.
    """
    return float(np.sqrt(2 * max(mf.masses.max(), 1.0) * I0 * mf.n))


def averaging_sums(snap: Snapshot, f) -> tuple[float, float]:
    """(1/N) sum f(x/N) (p_x/m_x)^j (m_x - m_bar) for j = 1, 2."""
    n = snap.n
    w = _weights(f, n)
    m = snap.mf.masses
    v = snap.mean_p / m
    dm = m - snap.mf.m_bar
    return float(w @ (v * dm) / n), float(w @ (v**2 * dm) / n)


def field_rows(experiment_id: str, n: int, seed: int, t: float, values: dict):
    """Long-format rows (experiment_id, N, seed, t, quantity_name, value)."""
    return [(experiment_id, n, seed, t, name, float(val)) for name, val in values.items()]


def initial_invariants(ensemble: Ensemble) -> tuple[float, float]:
    """H and I of the mean state at t = 0."""
    return conserved_quantities(ensemble.moments.mean_r, ensemble.moments.mean_p, ensemble.mf)
