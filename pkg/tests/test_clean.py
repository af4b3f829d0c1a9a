import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from chain_hydro import clean


def test_dispersion_values():
    assert clean.dispersion(0.0) == 0.0
    assert clean.dispersion(0.5) == 2.0
    assert clean.dispersion(1 / 6) == pytest.approx(1.0, rel=1e-15)
    k = np.linspace(0.01, 0.99, 7)
    h = 1e-6
    fd = (clean.dispersion(k + h) - clean.dispersion(k - h)) / (2 * h)
    np.testing.assert_allclose(clean.dispersion_prime(k), fd, atol=1e-6)


def ring_state(n, seed, zero_sum=True):
    rng = np.random.default_rng(seed)
    r, p = rng.standard_normal(n), rng.standard_normal(n)
    if zero_sum:
        r -= r.mean()
    return r, p


def test_parseval_and_inverse():
    r, p = ring_state(64, 0)
    w = clean.wavefield_from_fields(r, p)
    assert np.sum(np.abs(w.phi_hat) ** 2) / 64 == pytest.approx(r @ r + p @ p, rel=1e-12)
    assert w.energy() == pytest.approx(0.5 * (r @ r + p @ p), rel=1e-12)
    r2, p2 = clean.fields_from_wavefield(w)
    np.testing.assert_allclose(r2, r, atol=1e-13)
    np.testing.assert_allclose(p2, p, atol=1e-13)
    # a stretch sum is carried separately
    r, p = ring_state(64, 1, zero_sum=False)
    w = clean.wavefield_from_fields(r, p)
    assert w.energy() == pytest.approx(0.5 * (r @ r + p @ p), rel=1e-12)
    np.testing.assert_allclose(clean.fields_from_wavefield(w)[0], r, atol=1e-13)


def test_phase_evolution():
    r, p = ring_state(32, 2)
    w = clean.wavefield_from_fields(r, p)
    assert np.array_equal(clean.evolve_wavefield(w, 0.0).phi_hat, w.phi_hat)
    w5 = clean.evolve_wavefield(w, 5.3)
    np.testing.assert_allclose(np.abs(w5.phi_hat), np.abs(w.phi_hat), rtol=1e-14)
    # a single mode returns after one period
    phi = np.zeros(32, complex)
    phi[4] = 1.0 + 0.5j
    single = clean.WaveField(32, phi)
    period = 2 * np.pi / clean.dispersion(4 / 32)
    np.testing.assert_allclose(clean.evolve_wavefield(single, period).phi_hat, phi, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 24), st.floats(-20, 20), st.integers(0, 1000))
def test_flow_matches_matrix_exponential(n, t, seed):
    r, p = ring_state(n, seed, zero_sum=False)
    A = clean.ring_generator(n)
    assert np.abs(A + A.T).max() == 0
    z = expm(A * t) @ np.concatenate((r, p))
    rt, pt = clean.ring_evolve(r, p, t)
    np.testing.assert_allclose(np.concatenate((rt, pt)), z, atol=1e-10)


def test_equilibrium_covariance_invariance():
    assert clean.exact_covariance_deviation(1.0, 1000.0, 256) < 1e-12
    assert clean.exact_covariance_deviation(0.5, 33.0, 64) < 1e-12
    samples = 10_000
    dev = clean.covariance_invariance_check(1.0, 1000.0, 256, samples, 7)
    assert dev < 3 * 1.5 / np.sqrt(samples)
    # the lag-averaged estimate is tighter: about 1/sqrt(n samples) per entry
    assert dev < 6 * np.sqrt(2) / np.sqrt(256 * samples)
    dev0 = clean.covariance_invariance_check(2.0, 0.0, 128, 2000, 7)
    assert 0 < dev0 < 6 * np.sqrt(2) * 0.5 / np.sqrt(128 * 2000)
    with pytest.raises(ValueError):
        clean.covariance_invariance_check(0.0, 1.0, 8, 10, 0)


def gibbs_diag(N):
    y = np.arange(2 * N) / (2 * N)
    v = 1 / (1 + 0.5 * np.sin(np.pi * y) ** 2)
    return np.concatenate((v, v))


def test_wigner_identity_general_covariance():
    N = 24
    rng = np.random.default_rng(3)
    B = rng.standard_normal((4 * N, 4 * N))
    C = B @ B.T / (4 * N)
    for xi, k, t in ((0, 10, 1.3), (2, 17, 0.7), (5, 30, 4.0)):
        chk = clean.wigner_phase_identity(C, xi, k, t, N)
        assert abs(chk.lhs - chk.rhs) <= 1e-10
        assert abs(chk.lhs) > 1e-3


def test_wigner_xi_zero_invariant():
    N = 64
    c0 = clean.wigner_phase_identity(gibbs_diag(N), 0, 40, 0.0, N)
    c1 = clean.wigner_phase_identity(gibbs_diag(N), 0, 40, 3.0, N)
    assert c1.lhs == pytest.approx(c0.lhs, abs=1e-12)
    assert c1.approx_error == 0.0


def test_wigner_thermal_off_diagonal_vanishes():
    N = 64
    thermal = np.full(8 * N // 2, 0.8)
    for t in (0.0, 2.0):
        chk = clean.wigner_phase_identity(thermal, 3, 50, t, N)
        assert abs(chk.lhs) < 1e-12 and abs(chk.rhs) < 1e-12


def test_wigner_index_checks():
    cov = gibbs_diag(16)
    with pytest.raises(ValueError):
        clean.wigner_phase_identity(cov, 3, 1, 1.0, 16)
    with pytest.raises(ValueError):
        clean.wigner_phase_identity(cov, 1.5, 8, 1.0, 16)
    with pytest.raises(ValueError):
        clean.wigner_phase_identity(cov[:-1], 1, 8, 1.0, 16)


def test_approximation_error_order():
    # symmetric offsets k +- xi/2N cancel the second-order term of the
    # phase expansion, leaving a third-order remainder ~ xi^3 w''' t / (24 N^2)
    errs = []
    for N in (256, 512, 1024):
        chk = clean.wigner_phase_identity(gibbs_diag(N), 1, N // 2, 1.0, N)
        errs.append(chk.approx_error)
        third = np.pi**3 * 2 * np.cos(np.pi / 4) / (24 * N**2)    # |w'''(1/4)| xi^3 t / 24 N^2
        assert chk.approx_error == pytest.approx(third, rel=1e-3)
    assert errs[1] / errs[0] == pytest.approx(0.25, rel=1e-3)


def test_low_mode_fraction_and_export(tmp_path):
    phi = np.zeros(16, complex)
    phi[[0, 1, 15, 8]] = [1, 1, 1, 1]
    w = clean.WaveField(16, phi)
    assert clean.low_mode_fraction(w, 1) == pytest.approx(0.75)
    path = tmp_path / "w.csv"
    clean.export_wavefield(w, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["k", "abs2", "phase"] and len(rows) == 17
    assert float(rows[9][0]) == 0.5 and float(rows[9][1]) == 1.0
