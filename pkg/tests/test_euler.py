import csv

import numpy as np
import pytest
from scipy import integrate

from chain_hydro.euler import (QuadratureError, TruncationWarning, energy_field, export_snapshot,
                               limit_field, solve_wave, weak_form_residuals)
from chain_hydro.fields import TestFunction
from chain_hydro.gibbs import MacroProfiles, Profile, canonical_profiles

SEPARABLE = MacroProfiles(Profile("constant", (1.0,)), Profile("sine", (1.0,)), Profile("constant", (0.0,)))


def test_separable_solution():
    fields = solve_wave(SEPARABLE, 1.0)
    y = np.linspace(0, 1, 1000)
    for t in (0.0, 0.3, 1.7, 12.25):
        np.testing.assert_allclose(fields.r(y, t), np.sin(np.pi * y) * np.cos(np.pi * t), atol=1e-9)
        np.testing.assert_allclose(fields.p(y, t), np.cos(np.pi * y) * np.sin(np.pi * t), atol=1e-9)


def _odd(f, y):
    y = np.mod(y, 2.0)
    return np.where(y <= 1, f(y), -f(2 - y))


def _even(f, y):
    y = np.mod(y, 2.0)
    return np.where(y <= 1, f(y), f(2 - y))


def test_dalembert():
    m_bar = 1.44
    c = 1 / np.sqrt(m_bar)
    r0 = Profile("polynomial", (0.0, 1.0, -1.0))          # y (1 - y)
    p0 = Profile("polynomial", (0.0, 0.0, 3.0, -2.0))     # flat at both ends
    fields = solve_wave(MacroProfiles(Profile("constant", (1.0,)), r0, p0), m_bar)
    y = np.linspace(0, 1, 301)
    for t in (0.4, 2.3):
        # r and w = p / sqrt(m_bar) obey the wave equation with speed c
        fwd = _odd(r0, y + c * t) + _even(p0, y + c * t) * c
        bwd = _odd(r0, y - c * t) - _even(p0, y - c * t) * c
        np.testing.assert_allclose(fields.r(y, t), 0.5 * (fwd + bwd), atol=2e-5)


def test_energy_transport_law():
    prof = canonical_profiles()
    fields = solve_wave(prof, 1.1)
    y = np.linspace(0.1, 0.9, 9)
    t, h = 0.37, 1e-5
    de_dt = (energy_field(fields, y, t + h) - energy_field(fields, y, t - h)) / (2 * h)
    rp = lambda yy: fields.r(yy, t) * fields.p(yy, t)
    d_rp = (rp(y + h) - rp(y - h)) / (2 * h)
    np.testing.assert_allclose(de_dt, d_rp / 1.1, atol=1e-7)


def test_mechanical_energy_parseval_and_conservation():
    fields = solve_wave(canonical_profiles(), 0.9)
    for t in (0.0, 0.8):
        quad = integrate.quad(lambda y: fields.p(y, t) ** 2 / 1.8 + fields.r(y, t) ** 2 / 2, 0, 1,
                              epsabs=1e-13)[0]
        assert fields.mechanical_energy(t) == pytest.approx(quad, abs=1e-11)
    assert fields.mechanical_energy(0.8) == pytest.approx(fields.mechanical_energy(0.0), rel=1e-13)


def test_total_momentum_constant():
    fields = solve_wave(canonical_profiles(), 1.0)
    one = TestFunction.constant(1.0)
    p0 = limit_field(fields, one, 0.0, "P")
    assert p0 == pytest.approx(0.0, abs=1e-12)
    assert limit_field(fields, one, 0.77, "P_N") == pytest.approx(p0, abs=1e-10)


def test_weak_form_identities():
    fields = solve_wave(canonical_profiles(), 1.0)
    f = TestFunction.sine(2)
    g = TestFunction.cosine(1)
    res_r, res_p = weak_form_residuals(fields, f, f.df, g, g.df, 0.6)
    assert abs(res_r) < 1e-7 and abs(res_p) < 1e-7


def test_truncation_and_caps():
    rough = MacroProfiles(Profile("constant", (1.0,)), Profile("constant", (0.0,)),
                          Profile("polynomial", (0.0, 1.0)))
    with pytest.warns(TruncationWarning):
        solve_wave(rough, 1.0, K=16)
    with pytest.raises(ValueError):
        solve_wave(SEPARABLE, 1.0, K=0)
    with pytest.raises(ValueError):
        solve_wave(SEPARABLE, 1.0, K=1 << 17)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_quadrature_error_and_field_names():
    fields = solve_wave(canonical_profiles(), 1.0)
    with pytest.raises(QuadratureError):
        limit_field(fields, TestFunction.sine(1), 0.2, "E", tol=1e-30)
    with pytest.raises(ValueError):
        limit_field(fields, TestFunction.sine(1), 0.2, "Q")


def test_export_snapshot(tmp_path):
    fields = solve_wave(canonical_profiles(), 1.0)
    path = tmp_path / "snap.csv"
    export_snapshot(fields, 0.25, path, n_points=11)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["y", "r", "p", "e"] and len(rows) == 12
    assert float(rows[1][1]) == 0.0
