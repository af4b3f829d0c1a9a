"""Disorder sampling, free-boundary operators and the eigenmodes of the chain.

The chain has sites x = 1..N with masses m_x, unit springs and free ends
(q_0 = q_1, q_{N+1} = q_N).  Its normal modes solve

    M^{-1} (-Delta) psi^k = omega_k^2 psi^k,    <psi^j, M psi^k> = delta_jk,

and are obtained from the symmetric tridiagonal matrix
M^{-1/2} (-Delta) M^{-1/2}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "MassLaw",
    "MassField",
    "EigenBasis",
    "EigensolverError",
    "sample_masses",
    "dynamical_bands",
    "build_dynamical_matrix",
    "eigendecompose",
    "apply_laplacian",
    "save_basis",
    "load_basis",
]

ORTHO_TOL = 1e-10
RESIDUAL_RTOL = 1e-9
RESIDUAL_ATOL = 1e-12


class EigensolverError(RuntimeError):
    """The computed eigenpairs miss the residual or orthonormality tolerance."""


@dataclass(frozen=True)
class MassLaw:
    """Distribution of the i.i.d. masses: uniform on [low, high] or constant.

    A constant law is a uniform law with ``low == high``.
    """

    low: float
    high: float

    def __post_init__(self):
        if not self.low > 0:
            raise ValueError(f"masses must be positive, got lower bound {self.low}")
        if self.high < self.low:
            raise ValueError(f"upper bound {self.high} below lower bound {self.low}")

    @classmethod
    def uniform(cls, low: float = 0.8, high: float = 1.2) -> "MassLaw":
        return cls(float(low), float(high))

    @classmethod
    def constant(cls, value: float = 1.0) -> "MassLaw":
        return cls(float(value), float(value))

    @property
    def is_constant(self) -> bool:
        return self.low == self.high

    @property
    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def describe(self) -> str:
        if self.is_constant:
            return f"constant {self.low!r}"
        return f"uniform {self.low!r} {self.high!r}"

    @classmethod
    def parse(cls, text: str) -> "MassLaw":
        """Inverse of :meth:`describe`."""
        parts = text.split()
        if parts[0] == "constant" and len(parts) == 2:
            return cls.constant(float(parts[1]))
        if parts[0] == "uniform" and len(parts) == 3:
            return cls.uniform(float(parts[1]), float(parts[2]))
        raise ValueError(f"cannot parse mass law {text!r}")


@dataclass(frozen=True, eq=False)
class MassField:
    masses: np.ndarray
    seed: int
    law: MassLaw

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @property
    def n(self) -> int:
        return self.masses.size

    @property
    def m_bar(self) -> float:
        """Mean of the law (not the empirical mean)."""
        return self.law.mean


def sample_masses(law: MassLaw, n: int, seed: int) -> MassField:
    """Draw ``n`` i.i.d. masses from ``law``; deterministic in ``(law, n, seed)``."""
    if n < 2:
        raise ValueError(f"chain needs at least 2 sites, got n={n}")
    if law.is_constant:
        masses = np.full(n, law.low)
    else:
        rng = np.random.default_rng(seed)
        masses = rng.uniform(law.low, law.high, size=n)
    return MassField(masses, int(seed), law)


def dynamical_bands(mf: MassField) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of M^{-1/2} (-Delta) M^{-1/2} with free ends."""
    m = mf.masses
    c = np.full(mf.n, 2.0)
    c[0] = c[-1] = 1.0
    return c / m, -1.0 / np.sqrt(m[:-1] * m[1:])


def build_dynamical_matrix(mf: MassField) -> np.ndarray:
    d, e = dynamical_bands(mf)
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


def apply_laplacian(q: np.ndarray) -> np.ndarray:
    """(-Delta q) with free boundary conditions; acts on the first axis."""
    q = np.asarray(q, dtype=float)
    grad = np.diff(q, axis=0)
    out = np.zeros_like(q)
    out[:-1] -= grad
    out[1:] += grad
    return out


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Normal modes of one mass configuration.

    ``modes[:, k]`` is psi^k (length N) and ``strain_modes[:, k]`` is
    psi~^k = (grad_+ psi^k) / omega_k (length N-1).  Column 0 of
    ``strain_modes`` is identically zero: the strain basis runs over
    k = 1..N-1 only.
    """

    omegas: np.ndarray
    modes: np.ndarray
    strain_modes: np.ndarray
    mf: MassField = field(repr=False)

    def __post_init__(self):
        for name in ("omegas", "modes", "strain_modes"):
            getattr(self, name).setflags(write=False)

    @property
    def n(self) -> int:
        return self.omegas.size

    @property
    def masses(self) -> np.ndarray:
        return self.mf.masses

    def orthonormality_error(self) -> tuple[float, float]:
        """Max deviation of <psi^j, M psi^k> and <psi~^j, psi~^k> from the identity."""
        psi = self.modes
        g = psi.T @ (self.masses[:, None] * psi)
        s = self.strain_modes[:, 1:]
        h = s.T @ s
        return (float(np.abs(g - np.eye(self.n)).max()),
                float(np.abs(h - np.eye(self.n - 1)).max()))

    def residuals(self) -> np.ndarray:
        """||M^{-1}(-Delta) psi^k - omega_k^2 psi^k|| for every k."""
        lhs = apply_laplacian(self.modes) / self.masses[:, None]
        return np.linalg.norm(lhs - self.modes * self.omegas**2, axis=0)

    def check(self) -> None:
        res = self.residuals()
        bound = RESIDUAL_RTOL * self.omegas**2 + RESIDUAL_ATOL
        bad = np.flatnonzero(res > bound)
        if bad.size:
            k = bad[0]
            raise EigensolverError(
                f"eigen-residual {res[k]:.3e} exceeds {bound[k]:.3e} at k={k}")
        err_m, err_s = self.orthonormality_error()
        if max(err_m, err_s) > ORTHO_TOL:
            raise EigensolverError(
                f"orthonormality violated: M-inner {err_m:.3e}, strain {err_s:.3e}")


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive; entries within 1e-9 of the max count
    # as ties and the lowest index wins, so symmetric modes are stable
    a = np.abs(vecs)
    idx = np.argmax(a >= a.max(axis=0) * (1 - 1e-9), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eigendecompose(mf: MassField, check: bool = True) -> EigenBasis:
    """Eigenmodes sorted by increasing frequency, with the zero mode made exact.

    Raises :class:`EigensolverError` when ``check`` is set and the result
    misses the residual (1e-9 relative) or orthonormality (1e-10) tolerance.
    """
    d, e = dynamical_bands(mf)
    lam, phi = eigh_tridiagonal(d, e)
    order = np.argsort(lam, kind="stable")
    lam, phi = lam[order], phi[:, order]

    psi = _fix_signs(phi / np.sqrt(mf.masses)[:, None])
    psi[:, 0] = 1.0 / np.sqrt(mf.masses.sum())
    lam[0] = 0.0
    omegas = np.sqrt(np.clip(lam, 0.0, None))

    strain = np.zeros((mf.n - 1, mf.n))
    strain[:, 1:] = np.diff(psi[:, 1:], axis=0) / omegas[1:]
    basis = EigenBasis(omegas, psi, strain, mf)
    if check:
        basis.check()
    return basis


def save_basis(path, basis: EigenBasis) -> None:
    """Write a basis as decimal text.

    Three header lines (``# n=``, ``# seed=``, ``# law=``) are followed by
    N+1 rows of N columns: row 0 holds omega_k, row x holds psi^k_x, so
    column k reads (omega_k, psi^k_1, ..., psi^k_N).
    """
    mf = basis.mf
    body = np.vstack([basis.omegas, basis.modes])
    header = f"n={mf.n}\nseed={mf.seed}\nlaw={mf.law.describe()}"
    np.savetxt(path, body, fmt="%.17g", header=header, comments="# ")


def load_basis(path) -> EigenBasis:
    """Read a file written by :func:`save_basis`; masses are re-drawn from the header."""
    meta = {}
    with Path(path).open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
    try:
        n, seed, law = int(meta["n"]), int(meta["seed"]), MassLaw.parse(meta["law"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing header field {exc}") from None
    body = np.loadtxt(path, ndmin=2)
    if body.shape != (n + 1, n):
        raise ValueError(f"{path}: body has shape {body.shape}, expected {(n + 1, n)}")
    mf = sample_masses(law, n, seed)
    omegas, psi = body[0], body[1:]
    strain = np.zeros((n - 1, n))
    strain[:, 1:] = np.diff(psi[:, 1:], axis=0) / omegas[1:]
    return EigenBasis(omegas.copy(), psi.copy(), strain, mf)
