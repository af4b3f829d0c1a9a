"""Exact numerical laboratory for the disordered harmonic chain."""
from .chain import (EigenBasis, EigensolverError, MassField, MassLaw, build_dynamical_matrix,
                    eigendecompose, load_basis, sample_masses, save_basis)
from .gibbs import (InitialMoments, MacroProfiles, Profile, TableProfile, canonical_profiles,
                    equilibrium_profiles, initial_moments, sample_configuration)
from .evolution import (Ensemble, ModeCovariance, ModeState, conserved_quantities,
                        evolve_covariance, evolve_mode_state, initial_mode_covariance,
                        mode_energies, project_mean, reconstruct, site_thermal_variances)
from .euler import MacroFields, energy_field, limit_field, solve_wave
from .fields import (Snapshot, TestFunction, apriori_bounds, averaging_sums, empirical_field,
                     energy_split, holder_modulus, mode_band_split, take_snapshot)
from .localization import (ModeSupport, band_average, basis_decay_rates, localization_length_profile,
                           loglog_slope, mode_support, support_pass_rate, support_table)
from .clean import (WaveField, covariance_invariance_check, dispersion, evolve_wavefield,
                    exact_covariance_deviation, ring_evolve, wavefield_from_fields, wigner_phase_identity)
from .runner import ConfigError, ExperimentConfig, load_config, run_experiment

__version__ = "0.1.0"
