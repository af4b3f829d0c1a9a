"""Equal-mass reference chain on the ring Z/nZ.

Sites x = 0..n-1 carry a stretch r_x and a momentum p_x with

    dr_x/dt = p_{x+1} - p_x,    dp_x/dt = r_x - r_{x-1}.

With transforms f^(k) = sum_x exp(i 2 pi k x) f_x on the dual grid k = j/n,
the wave function phi^(k) = w(k) q^(k) + i p^(k) rotates as
exp(-i w(k) t), w(k) = |2 sin(pi k)|.  Here w q^ is obtained from the
stretch as r^(k) w(k) / (exp(-i 2 pi k) - 1); the stretch sum r^(0) is a
separate conserved number kept on the :class:`WaveField`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "dispersion",
    "dispersion_prime",
    "WaveField",
    "wavefield_from_fields",
    "fields_from_wavefield",
    "evolve_wavefield",
    "ring_evolve",
    "ring_generator",
    "covariance_invariance_check",
    "exact_covariance_deviation",
    "WignerCheck",
    "wigner_phase_identity",
    "low_mode_fraction",
    "export_wavefield",
]


def dispersion(k):
    """w(k) = |2 sin(pi k)|."""
    return np.abs(2.0 * np.sin(np.pi * np.asarray(k, dtype=float)))


def dispersion_prime(k):
    """dw/dk away from the integers."""
    k = np.asarray(k, dtype=float)
    return 2.0 * np.pi * np.cos(np.pi * k) * np.sign(np.sin(np.pi * k))


def _grid(n: int) -> np.ndarray:
    return np.arange(n) / n


def _gain(n: int) -> np.ndarray:
    """w(k) / (exp(-i 2 pi k) - 1), zero at k = 0; unit modulus elsewhere."""
    k = _grid(n)
    den = np.exp(-2j * np.pi * k) - 1.0
    g = np.zeros(n, dtype=complex)
    g[1:] = dispersion(k[1:]) / den[1:]
    return g


@dataclass(frozen=True, eq=False)
class WaveField:
    n: int
    phi_hat: np.ndarray        # complex, shape (..., n)
    time: float = 0.0
    stretch_sum: float | np.ndarray = 0.0

    def mode_energy(self) -> np.ndarray:
        return np.abs(self.phi_hat) ** 2

    def energy(self):
        """Total energy sum (p^2 + r^2)/2.

        Equals (1/2n) sum |phi^|^2 when the stretches sum to zero, which is
        the case for any configuration coming from ring positions q.
        """
        s = np.asarray(self.stretch_sum)
        return 0.5 * (np.sum(self.mode_energy(), axis=-1) + s**2) / self.n


def wavefield_from_fields(r, p, time: float = 0.0) -> WaveField:
    """Transform ring fields (last axis = site) to the wave function."""
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    if r.shape != p.shape:
        raise ValueError("r and p must have the same shape")
    n = r.shape[-1]
    r_hat = n * np.fft.ifft(r, axis=-1)
    p_hat = n * np.fft.ifft(p, axis=-1)
    phi = _gain(n) * r_hat + 1j * p_hat
    return WaveField(n, phi, time, r.sum(axis=-1))


def fields_from_wavefield(w: WaveField):
    """Inverse of :func:`wavefield_from_fields`; returns ``(r, p)``."""
    n = w.n
    phi = w.phi_hat
    # phi(-k)^* sits at index (-j) mod n
    mirror = np.conj(np.roll(phi[..., ::-1], 1, axis=-1))
    wq = 0.5 * (phi + mirror)
    p_hat = (phi - mirror) / 2j
    k = _grid(n)
    r_hat = np.zeros_like(phi)
    r_hat[..., 1:] = wq[..., 1:] * (np.exp(-2j * np.pi * k[1:]) - 1.0) / dispersion(k[1:])
    r_hat[..., 0] = w.stretch_sum
    r = np.real(np.fft.fft(r_hat, axis=-1)) / n
    p = np.real(np.fft.fft(p_hat, axis=-1)) / n
    return r, p


def evolve_wavefield(w: WaveField, t: float) -> WaveField:
    phase = np.exp(-1j * dispersion(_grid(w.n)) * t)
    return WaveField(w.n, w.phi_hat * phase, w.time + t, w.stretch_sum)


def ring_evolve(r, p, t: float):
    """Exact flow of the ring fields over time ``t`` (batched on leading axes)."""
    return fields_from_wavefield(evolve_wavefield(wavefield_from_fields(r, p), t))


def ring_generator(n: int) -> np.ndarray:
    """Matrix A of d(r, p)/dt = A (r, p); skew-symmetric."""
    shift = np.roll(np.eye(n), 1, axis=1)     # (S p)_x = p_{x+1}
    D = shift - np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, D], [-D.T, Z]])


def _lag_sums(a, b):
    """sum_{s,x} a_x b_{x+d} for every lag d, over the sample axis 0."""
    fa = np.fft.fft(a, axis=-1)
    fb = np.fft.fft(b, axis=-1)
    return np.real(np.fft.ifft(np.conj(fa) * fb, axis=-1)).sum(axis=0)


def covariance_invariance_check(beta: float, t: float, n: int, samples: int, seed,
                                chunk: int = 1000) -> float:
    """Monte Carlo check that the equilibrium covariance survives the flow.

    Draws ``samples`` independent equilibrium states (all fields iid with
    variance 1/beta), evolves them exactly and returns the largest deviation
    of the estimated covariance from delta_{x,y}/beta.  Because the ring is
    translation invariant the estimate averages over x at fixed lag x - y,
    which brings the sampling error per entry to about 1/(beta sqrt(n samples)).
    Samples are drawn in chunks from a single generator stream.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    sd = 1.0 / np.sqrt(beta)
    rr = np.zeros(n)
    pp = np.zeros(n)
    rp = np.zeros(n)
    left = samples
    while left > 0:
        s = min(chunk, left)
        r = sd * rng.standard_normal((s, n))
        p = sd * rng.standard_normal((s, n))
        r, p = ring_evolve(r, p, t)
        rr += _lag_sums(r, r)
        pp += _lag_sums(p, p)
        rp += _lag_sums(r, p)
        left -= s
    norm = float(n) * samples
    delta = np.zeros(n)
    delta[0] = 1.0 / beta
    return float(max(np.abs(rr / norm - delta).max(), np.abs(pp / norm - delta).max(),
                     np.abs(rp / norm).max()))


def exact_covariance_deviation(beta: float, t: float, n: int) -> float:
    """Propagate the covariance analytically, C(t) = U C(0) U^T, without sampling."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    # columns of U: images of the unit vectors
    ur, up = ring_evolve(np.vstack((eye, zero)), np.vstack((zero, eye)), t)
    U = np.hstack((ur, up)).T
    C = (U @ U.T) / beta
    return float(np.abs(C - np.eye(2 * n) / beta).max())


class WignerCheck(NamedTuple):
    lhs: complex
    rhs: complex
    approx: complex
    approx_error: float


def _functional(n: int, j: int):
    """Coefficients (a_r, a_p) with phi^(j/n) = a_r . r + a_p . p."""
    e = np.exp(2j * np.pi * j * np.arange(n) / n)
    return _gain(n)[j] * e, 1j * e


def _pull_back(a_r, a_p, T):
    """U(T)^T applied to a complex functional, via the flow backwards in time."""
    rr, pr = ring_evolve(a_r.real, a_p.real, -T)
    ri, pi_ = ring_evolve(a_r.imag, a_p.imag, -T)
    return rr + 1j * ri, pr + 1j * pi_


def _quad(cov0, a, b):
    """conj(a)^T C b with C either a full matrix or a diagonal given as a vector."""
    cov0 = np.asarray(cov0, dtype=float)
    if cov0.ndim == 1:
        return complex(np.sum(np.conj(a) * cov0 * b))
    return complex(np.conj(a) @ cov0 @ b)


def wigner_phase_identity(cov0, xi_index: int, k_index: int, t: float, N: int) -> WignerCheck:
    """Finite-N phase law of the Wigner transform on a ring of 2N sites.

    ``cov0`` is the covariance of the ring fields z = (r, p) at time 0:
    a (4N, 4N) matrix, or a length-4N vector for independent sites.
    With k_pm = (k_index +- xi_index) / 2N and T = N t,

        lhs = (2/N) <phi^*(k_-, T) phi(k_+, T)>   from the real-space flow
        rhs = (2/N) <phi^*(k_-, 0) phi(k_+, 0)> exp(i [w(k_-) - w(k_+)] T)

    ``approx`` replaces the exact phase with exp(-i w'(k) xi t) and
    ``approx_error`` is the modulus of the phase discrepancy.
    """
    for name, v in (("xi_index", xi_index), ("k_index", k_index), ("N", N)):
        if int(v) != v:
            raise ValueError(f"{name} must be an integer, got {v!r}")
    n = 2 * int(N)
    jm, jp = int(k_index) - int(xi_index), int(k_index) + int(xi_index)
    if not (0 <= jm < n and 0 <= jp < n):
        raise ValueError(f"k_index +- xi_index must lie in [0, {n}), got {jm}, {jp}")
    cov0 = np.asarray(cov0, dtype=float)
    if cov0.shape not in ((2 * n,), (2 * n, 2 * n)):
        raise ValueError(f"cov0 must have shape ({2 * n},) or ({2 * n}, {2 * n}), got {cov0.shape}")
    T = N * t
    lm, lp = _functional(n, jm), _functional(n, jp)
    am, ap = _pull_back(*lm, T), _pull_back(*lp, T)
    scale = 2.0 / N
    lhs = scale * _quad(cov0, np.concatenate(am), np.concatenate(ap))
    w0 = scale * _quad(cov0, np.concatenate(lm), np.concatenate(lp))
    phase = np.exp(1j * (dispersion(jm / n) - dispersion(jp / n)) * T)
    approx_phase = np.exp(-1j * dispersion_prime(k_index / n) * xi_index * t)
    return WignerCheck(complex(lhs), complex(w0 * phase), complex(w0 * approx_phase),
                       float(abs(phase - approx_phase)))


def low_mode_fraction(w: WaveField, cells: int) -> float:
    """Share of sum |phi^|^2 carried by the dual-grid cells |j| <= cells."""
    e = w.mode_energy()
    j = np.arange(w.n)
    near = np.minimum(j, w.n - j) <= cells
    total = e.sum()
    return float(e[near].sum() / total) if total > 0 else 0.0


def export_wavefield(w: WaveField, path) -> None:
    """CSV with columns k, |phi^|^2, phase."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "abs2", "phase"])
        for k, a, ph in zip(_grid(w.n), np.abs(w.phi_hat) ** 2, np.angle(w.phi_hat)):
            writer.writerow([repr(float(k)), repr(float(a)), repr(float(ph))])
