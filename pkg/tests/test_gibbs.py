import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chain_hydro.chain import MassLaw, sample_masses
from chain_hydro.gibbs import (MacroProfiles, Profile, TableProfile, canonical_profiles,
                               equilibrium_profiles, initial_moments, load_table, profile_from_spec,
                               sample_configuration)


def test_canonical_profile_values():
    p = canonical_profiles()
    assert p.beta(0.0) == 1.0 and p.beta(0.5) == pytest.approx(1.5)
    assert p.r_bar(0.0) == 0.0 and p.r_bar(1.0) == 0.0
    assert p.r_bar(0.5) == pytest.approx(0.3)
    assert p.p_bar(0.0) == pytest.approx(0.3) and p.p_bar(1.0) == pytest.approx(-0.3)
    assert p.validate() == pytest.approx(1.0)


def test_initial_moments_formulas():
    mf = sample_masses(MassLaw.uniform(), 64, 5)
    mom = initial_moments(canonical_profiles(), mf)
    y = np.arange(1, 65) / 64
    beta = 1 + 0.5 * np.sin(np.pi * y) ** 2
    np.testing.assert_allclose(mom.mean_p, mf.masses * 0.3 * np.cos(np.pi * y) / 1.0, atol=1e-15)
    np.testing.assert_allclose(mom.mean_r, 0.3 * np.sin(np.pi * y[:-1]), atol=1e-15)
    np.testing.assert_allclose(mom.var_p, mf.masses / beta, rtol=1e-14)
    np.testing.assert_allclose(mom.var_r, 1 / beta[:-1], rtol=1e-14)
    assert mom.mean_r.size == 63 and mom.n == 64


def test_mean_momentum_uses_law_mean():
    # m_bar is the mean of the law, not of the sample
    law = MassLaw.uniform(0.5, 2.5)
    mf = sample_masses(law, 16, 1)
    mom = initial_moments(equilibrium_profiles(p_bar=1.0), mf)
    np.testing.assert_allclose(mom.mean_p, mf.masses / 1.5)


def test_sampling_matches_moments():
    mf = sample_masses(MassLaw.uniform(), 32, 2)
    mom = initial_moments(canonical_profiles(), mf)
    S = 20000
    r, p = sample_configuration(mom, 123, size=S)
    for x, mean, var in ((r, mom.mean_r, mom.var_r), (p, mom.mean_p, mom.var_p)):
        z_mean = (x.mean(0) - mean) / np.sqrt(var / S)
        z_var = (x.var(0) - var) / (var * np.sqrt(2 / S))
        assert np.abs(z_mean).max() < 4.5
        assert np.abs(z_var).max() < 4.5
    # independence across sites
    c = np.corrcoef(p[:, :4].T)
    assert np.abs(c - np.eye(4)).max() < 4.5 / np.sqrt(S)


def test_sampling_deterministic():
    mom = initial_moments(canonical_profiles(), sample_masses(MassLaw.uniform(), 16, 0))
    a = sample_configuration(mom, 7)
    b = sample_configuration(mom, 7)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_validation_errors():
    with pytest.raises(ValueError):
        MacroProfiles(Profile("constant", (0.0,)), Profile("constant", (0.0,)),
                      Profile("constant", (0.0,))).validate()
    with pytest.raises(ValueError):
        MacroProfiles(Profile("constant", (1.0,)), Profile("cosine", (0.1,)),
                      Profile("constant", (0.0,))).validate()
    with pytest.raises(ValueError):
        Profile("exponential", (1.0,))
    with pytest.raises(ValueError):
        Profile("sine_squared", (1.0,))


def test_table_profile(tmp_path):
    path = tmp_path / "beta.txt"
    y = np.linspace(0, 1, 11)
    np.savetxt(path, np.column_stack((y, 1 + y**2)), header="y value")
    prof = profile_from_spec(f"table:{path}")
    np.testing.assert_allclose(prof(y), 1 + y**2)
    assert isinstance(load_table(path), TableProfile)
    with pytest.raises(ValueError):
        TableProfile(np.array([0.1, 1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        TableProfile(np.array([0.0, 0.0, 1.0]), np.array([1.0, 2.0, 3.0]))


def test_table_stretch_ends_checked():
    y = np.linspace(0, 1, 5)
    ok = MacroProfiles(Profile("constant", (1.0,)), TableProfile(y, np.sin(np.pi * y).round(14)),
                       Profile("constant", (0.0,)))
    ok.validate()
    bad = MacroProfiles(Profile("constant", (1.0,)), TableProfile(y, y + 0.01),
                        Profile("constant", (0.0,)))
    with pytest.raises(ValueError):
        bad.validate()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["constant", "polynomial", "sine", "cosine", "sine_squared"]),
       st.lists(st.floats(-2, 2), min_size=2, max_size=4), st.floats(0.05, 0.95))
def test_profile_derivatives(kind, coeffs, y):
    if kind == "sine_squared":
        coeffs = coeffs[:2]
    prof = Profile(kind, tuple(coeffs))
    h = 1e-6
    fd = (prof(y + h) - prof(y - h)) / (2 * h)
    assert prof.derivative(y) == pytest.approx(fd, abs=1e-6)
