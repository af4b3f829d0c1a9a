"""Batch experiments: TOML configs, replica sweeps over (N, seed), CSV/SVG output.

Usage::

    python -m chain_hydro run CONFIG [--out DIR] [--workers K] [--seed-override S]
    python -m chain_hydro validate CONFIG
    python -m chain_hydro list-experiments

Exit status is 0 when every check passes, 1 when a check fails or a cell
raises, and 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import math
import os
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import stats

from . import clean
from .chain import MassLaw, eigendecompose, sample_masses
from .euler import limit_field, solve_wave
from .evolution import (Ensemble, conserved_quantities, evolve_mode_state, mode_energies,
                        project_state, reconstruct)
from .fields import (TestFunction, apriori_bounds, averaging_sums, empirical_field, energy_split,
                     field_rows, holder_bound, holder_pairs, holder_modulus, initial_invariants,
                     mode_band_split, take_snapshot)
from .gibbs import (MacroProfiles, canonical_profiles, equilibrium_profiles, initial_moments,
                    profile_from_spec, sample_configuration)
from .localization import band_average, basis_decay_rates, support_pass_rate, loglog_slope, support_table

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SCHEMA = 1
ENV_OUT = "CHAIN_HYDRO_OUT"

KINDS = {
    "conservation": "H, I and every mode energy along the exact flow of a sampled configuration",
    "equilibrium_exactness": "site variances stay at their equilibrium values for constant beta",
    "convergence": "R_N, P_N, E_N against the Euler solution, error trend in N",
    "frozen_temperature": "drift of the thermal energy F_N at times t N and t N^e",
    "localization": "support test of high modes and localization length against frequency",
    "averaging": "mass-fluctuation averaging sums, a priori sums and Hoelder modulus",
    "clean_chain": "ring phase law, Wigner phase identity and covariance invariance",
}

DEFAULT_TOLERANCES = {
    "conservation": 1e-10,
    "equilibrium": 1e-8,
    "decrease_slack": 1.0,
    "max_slope": -0.4,
    "frozen_slack": 1.1,
    "pass_rate_threshold": 0.95,
    "trend_slack": 0.02,
    "clean_control_max": 0.05,
    "zeta_slope": -2.0,
    "zeta_slope_tol": 0.5,
    "averaging_slope": -0.5,
    "averaging_slope_tol": 0.2,
    "wigner": 1e-10,
    "exact_covariance": 1e-12,
    "mc_sigmas": 4.5,
    "approx_ratio": 0.5,
    "approx_ratio_slack": 0.2,
}

DEFAULT_OPTIONS = {
    "convergence": {"R": ["sine:2"], "P": ["constant:1", "sine:1"], "E": ["sine:2"],
                    "slope_fields": ["R", "P"], "K": 512},
    "frozen_temperature": {"f": "sine:2", "time_exponents": [1.0, 1.5], "band_split": False},
    "conservation": {"time_exponents": [1.0, 2.0]},
    "equilibrium_exactness": {},
    "localization": {"zeta_N": None, "band_count": 8, "omega_window": [0.2, 0.6],
                     "clean_control": True, "threshold_N": None},
    "averaging": {"f": "constant:1", "apriori_bound": "mass_weighted", "holder_pairs": 1024},
    "clean_chain": {"k": 0.25, "xi_index": 1, "samples": 10000, "beta": 1.0,
                    "exact_max_n": 1024, "mc_max_n": 1024},
}

TOP_KEYS = {"name", "kind", "N", "seeds", "times", "alpha", "gamma", "mass_law", "profiles",
            "out", "workers", "tolerances", "options"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a kind, an (N, seed) grid, macroscopic times and settings."""

    kind: str
    N: tuple[int, ...]
    seeds: tuple[int, ...]
    times: tuple[float, ...]
    name: str = "experiment"
    alpha: float = 0.3
    gamma: float = 0.8
    mass_law: MassLaw = field(default_factory=MassLaw.uniform)
    profiles: MacroProfiles = field(default_factory=canonical_profiles)
    out: str | None = None
    workers: int = 1
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def tol(self, key: str) -> float:
        return self.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def opt(self, key: str):
        return self.options.get(key, DEFAULT_OPTIONS[self.kind][key])


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _profile(entry, where: str, base: Path):
    _require(isinstance(entry, dict) and "kind" in entry,
             f"{where}: expected a table with 'kind' (and 'coeffs')")
    kind = str(entry["kind"])
    if kind.startswith("table:"):
        path = Path(kind[len("table:"):])
        kind = "table:" + str(path if path.is_absolute() else base / path)
    try:
        return profile_from_spec(kind, entry.get("coeffs", ()))
    except (ValueError, OSError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict, base: Path = Path("."), name: str = "experiment") -> ExperimentConfig:
    unknown = set(data) - TOP_KEYS
    _require(not unknown, f"unknown field(s): {', '.join(sorted(unknown))}")
    kind = data.get("kind")
    _require(kind in KINDS, f"field 'kind': expected one of {sorted(KINDS)}, got {kind!r}")

    Ns = data.get("N")
    _require(isinstance(Ns, list) and Ns, "field 'N': must be a non-empty list")
    _require(all(isinstance(n, int) and n >= 8 for n in Ns), f"field 'N': entries must be integers >= 8, got {Ns}")
    seeds = data.get("seeds", [0])
    _require(isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds),
             "field 'seeds': must be a non-empty list of integers")
    _require(len(set(seeds)) == len(seeds), f"field 'seeds': seeds must be distinct, got {seeds}")
    times = data.get("times", [0.5])
    _require(isinstance(times, list) and times and all(isinstance(t, (int, float)) for t in times),
             "field 'times': must be a non-empty list of numbers")
    _require(all(t >= 0 for t in times), f"field 'times': must be >= 0, got {times}")

    alpha = float(data.get("alpha", 0.3))
    gamma = float(data.get("gamma", 0.8))
    _require(0 < alpha < 0.5, f"field 'alpha': must lie in (0, 1/2), got {alpha}")
    _require(0 < gamma < 1, f"field 'gamma': must lie in (0, 1), got {gamma}")
    if kind == "localization":
        _require(2 * alpha < gamma, f"fields 'alpha'/'gamma': need 2 alpha < gamma, got {alpha}, {gamma}")

    try:
        law = MassLaw.parse(str(data.get("mass_law", "uniform 0.8 1.2")))
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"field 'mass_law': {exc}") from None

    default = equilibrium_profiles() if kind == "equilibrium_exactness" else canonical_profiles()
    prof = data.get("profiles", {})
    _require(isinstance(prof, dict), "field 'profiles': must be a table")
    extra = set(prof) - {"beta", "r_bar", "p_bar"}
    _require(not extra, f"field 'profiles': unknown entries {sorted(extra)}")
    profiles = MacroProfiles(
        beta=_profile(prof["beta"], "profiles.beta", base) if "beta" in prof else default.beta,
        r_bar=_profile(prof["r_bar"], "profiles.r_bar", base) if "r_bar" in prof else default.r_bar,
        p_bar=_profile(prof["p_bar"], "profiles.p_bar", base) if "p_bar" in prof else default.p_bar,
    )
    try:
        profiles.validate()
    except ValueError as exc:
        raise ConfigError(f"field 'profiles': {exc}") from None

    tolerances = data.get("tolerances", {})
    _require(isinstance(tolerances, dict), "field 'tolerances': must be a table")
    bad = set(tolerances) - set(DEFAULT_TOLERANCES)
    _require(not bad, f"field 'tolerances': unknown entries {sorted(bad)}")
    options = data.get("options", {})
    _require(isinstance(options, dict), "field 'options': must be a table")
    bad = set(options) - set(DEFAULT_OPTIONS[kind])
    _require(not bad, f"field 'options': unknown entries {sorted(bad)} for kind {kind}")
    for key in ("R", "P", "E", "f"):
        if key in options:
            specs = options[key] if isinstance(options[key], list) else [options[key]]
            for spec in specs:
                try:
                    parse_test_function(spec)
                except ValueError as exc:
                    raise ConfigError(f"field 'options.{key}': {exc}") from None
    workers = data.get("workers", 1)
    _require(isinstance(workers, int) and workers >= 1, f"field 'workers': must be a positive integer")

    return ExperimentConfig(
        kind=kind, N=tuple(sorted(Ns)), seeds=tuple(seeds), times=tuple(float(t) for t in times),
        name=str(data.get("name", name)), alpha=alpha, gamma=gamma, mass_law=law, profiles=profiles,
        out=data.get("out"), workers=workers, tolerances=dict(tolerances), options=dict(options))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return config_from_dict(data, path.parent, path.stem)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_test_function(spec: str) -> TestFunction:
    """``constant:c``, ``sine:n`` or ``cosine:n``."""
    m = re.fullmatch(r"(constant|sine|cosine):([-+0-9.eE]+)", str(spec).strip())
    if not m:
        raise ValueError(f"bad test function {spec!r}; expected constant:c, sine:n or cosine:n")
    kind, arg = m.groups()
    if kind == "constant":
        return TestFunction.constant(float(arg))
    if float(arg) != int(float(arg)) or int(float(arg)) < 1:
        raise ValueError(f"{spec!r}: frequency must be a positive integer")
    return getattr(TestFunction, kind)(int(float(arg)))


def _suffix(e: float) -> str:
    return "" if e == 1.0 else f"@N^{e:g}"


# ---------------------------------------------------------------- cells

def _cell_conservation(cfg, n, seed):
    mf = sample_masses(cfg.mass_law, n, seed)
    basis = eigendecompose(mf)
    r0, p0 = sample_configuration(initial_moments(cfg.profiles, mf), [seed, n, 1])
    H0, I0 = conserved_quantities(r0, p0, mf)
    s0 = project_state(r0, p0, basis)
    E0 = mode_energies(s0)
    rows = []
    for e in cfg.opt("time_exponents"):
        for t in cfg.times:
            s = evolve_mode_state(s0, basis, t * n**e)
            r, p = reconstruct(s, basis)
            H, I = conserved_quantities(r, p, mf)
            Ek = mode_energies(s)
            Ek_re = mode_energies(project_state(r, p, basis))
            sfx = _suffix(e)
            rows += [
                (t, "H_drift" + sfx, abs(H - H0) / H0),
                (t, "I_drift" + sfx, abs(I - I0) / I0),
                (t, "Ek_drift" + sfx, float(np.max(np.abs(Ek - E0) / np.maximum(E0, 1e-300)))),
                (t, "Ek_reprojected_drift" + sfx, float(np.max(np.abs(Ek_re - E0)) / H0)),
            ]
    return rows, {}


def _cell_equilibrium(cfg, n, seed):
    mf = sample_masses(cfg.mass_law, n, seed)
    basis = eigendecompose(mf)
    mom = initial_moments(cfg.profiles, mf)
    ens = Ensemble(basis, mom)
    m = mf.masses
    rows = []
    for t in cfg.times:
        vr, vp = ens.variances_at(t * n)
        rows += [(t, "var_p_dev", float(np.max(np.abs(vp - mom.var_p) / (2 * m)))),
                 (t, "var_r_dev", float(np.max(np.abs(vr - mom.var_r) / 2)))]
    return rows, {}


def _cell_convergence(cfg, n, seed):
    mf = sample_masses(cfg.mass_law, n, seed)
    basis = eigendecompose(mf)
    fns = {w: [(s, parse_test_function(s)) for s in cfg.opt(w)] for w in ("R", "P", "E")}
    need_var = bool(fns["E"])
    ens = Ensemble(basis, initial_moments(cfg.profiles, mf), covariance=need_var)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fields = solve_wave(cfg.profiles, cfg.mass_law.mean, K=cfg.opt("K"))
    rows = []
    for t in cfg.times:
        snap = take_snapshot(ens, t * n, variances=need_var)
        for which, lst in fns.items():
            for spec, tf in lst:
                val = empirical_field(snap, tf, which)
                lim = limit_field(fields, tf, t, which)
                rows += [(t, f"{which}_N[{spec}]", val), (t, f"{which}_err[{spec}]", abs(val - lim))]
    return rows, {}


def _cell_frozen(cfg, n, seed):
    mf = sample_masses(cfg.mass_law, n, seed)
    basis = eigendecompose(mf)
    ens = Ensemble(basis, initial_moments(cfg.profiles, mf))
    spec = cfg.opt("f")
    tf = parse_test_function(spec)
    F0 = energy_split(take_snapshot(ens, 0.0), tf)[1]
    rows = []
    for e in cfg.opt("time_exponents"):
        for t in cfg.times:
            micro = t * n**e
            F = energy_split(take_snapshot(ens, micro), tf)[1]
            sfx = _suffix(e)
            rows.append((t, f"F_drift[{spec}]{sfx}", abs(F - F0)))
            if cfg.opt("band_split"):
                bs = mode_band_split(ens.covariance_at(micro), basis, tf, cfg.alpha)
                rows += [(t, f"F1[{spec}]{sfx}", bs.F1), (t, f"F2[{spec}]{sfx}", bs.F2),
                         (t, f"F_cross[{spec}]{sfx}", bs.cross)]
    return rows, {}


def _cell_localization(cfg, n, seed):
    mf = sample_masses(cfg.mass_law, n, seed)
    basis = eigendecompose(mf)
    rows = [(0.0, "pass_rate", support_pass_rate(basis, cfg.alpha, cfg.gamma))]
    table = support_table(basis, cfg.gamma)
    extra = {"modes": [(n, seed, int(k), float(w), int(c), float(o), float(i), bool(p))
                       for k, w, c, o, i, p in zip(*(table[c] for c in
                                                      ("k", "omega", "center", "outside_max", "ipr", "pass")))]}
    zeta_n = cfg.opt("zeta_N") or max(cfg.N)
    if n == zeta_n:
        extra["rates"] = basis_decay_rates(basis)
        extra["m_min"] = float(mf.masses.min())
    return rows, extra


def _cell_averaging(cfg, n, seed):
    mf = sample_masses(cfg.mass_law, n, seed)
    basis = eigendecompose(mf)
    ens = Ensemble(basis, initial_moments(cfg.profiles, mf), covariance=False)
    tf = parse_test_function(cfg.opt("f"))
    H0, I0 = initial_invariants(ens)
    m_max = float(mf.masses.max())
    hb = holder_bound(I0, mf)
    rows = [(0.0, "H0", H0), (0.0, "I0", I0)]
    rtol = 1 + 1e-12
    for t in cfg.times:
        snap = take_snapshot(ens, t * n, variances=False)
        A1, A2 = averaging_sums(snap, tf)
        ap = apriori_bounds(snap)
        literal = [ap.l2_r <= 2 * H0 * rtol, ap.l2_p <= 2 * H0 * rtol,
                   ap.h1_r <= 2 * I0 * rtol, ap.h1_p <= 2 * I0 * rtol]
        weighted = [ap.l2_r <= 2 * H0 * rtol, ap.l2_p <= 2 * m_max * H0 * rtol,
                    ap.h1_r <= 2 * m_max * I0 * rtol, ap.h1_p <= 2 * I0 * rtol]
        rows += [(t, "A1", A1), (t, "A2", A2),
                 (t, "l2_r", ap.l2_r), (t, "l2_p", ap.l2_p), (t, "h1_r", ap.h1_r), (t, "h1_p", ap.h1_p),
                 (t, "apriori_literal_violations", float(literal.count(False))),
                 (t, "apriori_weighted_violations", float(weighted.count(False))),
                 (t, "holder", holder_modulus(snap, holder_pairs(n, cfg.opt("holder_pairs")))), (t, "holder_bound", hb)]
    return rows, {}


def _clean_cov0(profiles: MacroProfiles, N: int):
    y = np.arange(2 * N) / (2 * N)
    v = 1.0 / profiles.beta(y)
    return np.concatenate((v, v))


def _cell_clean(cfg, n, seed):
    k_index = cfg.opt("k") * 2 * n
    if k_index != round(k_index):
        raise ValueError(f"k={cfg.opt('k')} is not on the dual grid of size {2 * n}")
    cov0 = _clean_cov0(cfg.profiles, n)
    beta = cfg.opt("beta")
    rows = []
    for t in cfg.times:
        chk = clean.wigner_phase_identity(cov0, cfg.opt("xi_index"), int(round(k_index)), t, n)
        rows += [(t, "wigner_identity_err", abs(chk.lhs - chk.rhs)),
                 (t, "approx_error", chk.approx_error)]
        if n <= cfg.opt("mc_max_n"):
            rows.append((t, "mc_deviation",
                         clean.covariance_invariance_check(beta, t * n, n, cfg.opt("samples"), [seed, n])))
        if n <= cfg.opt("exact_max_n"):
            rows.append((t, "exact_deviation", clean.exact_covariance_deviation(beta, t * n, n)))
    extra = {}
    if seed == cfg.seeds[0]:
        rng = np.random.default_rng([seed, n, 2])
        sd = np.sqrt(cov0)
        z = sd * rng.standard_normal(cov0.size)
        w = clean.wavefield_from_fields(z[:2 * n], z[2 * n:])
        extra["wavefield"] = clean.evolve_wavefield(w, max(cfg.times) * n)
    return rows, extra


CELLS = {
    "conservation": _cell_conservation,
    "equilibrium_exactness": _cell_equilibrium,
    "convergence": _cell_convergence,
    "frozen_temperature": _cell_frozen,
    "localization": _cell_localization,
    "averaging": _cell_averaging,
    "clean_chain": _cell_clean,
}


def run_cell(cfg: ExperimentConfig, n: int, seed: int):
    """Rows ``(t, quantity, value)`` and kind-specific extras for one (N, seed) cell."""
    return CELLS[cfg.kind](cfg, n, seed)


# ---------------------------------------------------------------- aggregation

class ConvergenceFit(NamedTuple):
    slope: float
    stderr: float
    Ns: tuple
    values: tuple          # per-N statistic
    excluded: int


def convergence_table(rows, statistic: str = "mean_abs") -> ConvergenceFit:
    """Fit log(statistic) against log N over rows ``(N, seed, value)``.

    ``statistic`` is ``mean_abs`` (mean |value| over seeds) or ``rms``.
    Rows with value exactly 0 are dropped with a warning.
    """
    rows = list(rows)
    zero = [r for r in rows if r[2] == 0]
    if zero:
        warnings.warn(f"{len(zero)} zero-error row(s) excluded from the fit", stacklevel=2)
    by_n: dict[int, list[float]] = {}
    for n, _seed, v in rows:
        if v != 0:
            by_n.setdefault(int(n), []).append(float(v))
    if len(by_n) < 3:
        raise ValueError(f"need at least 3 distinct N with nonzero rows, got {sorted(by_n)}")
    Ns = tuple(sorted(by_n))
    if statistic == "mean_abs":
        vals = tuple(float(np.mean(np.abs(by_n[n]))) for n in Ns)
    elif statistic == "rms":
        vals = tuple(float(np.sqrt(np.mean(np.square(by_n[n])))) for n in Ns)
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    fit = stats.linregress(np.log(Ns), np.log(vals))
    return ConvergenceFit(float(fit.slope), float(fit.stderr), Ns, vals, len(zero))


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def _collect(rows):
    """{(quantity, t): {N: [(seed, value), ...]}}."""
    out: dict = {}
    for _eid, n, seed, t, q, v in rows:
        out.setdefault((q, t), {}).setdefault(n, []).append((seed, v))
    return out


def summarize(rows):
    """Per (quantity, N, t): mean, standard error, RMS and seed count."""
    table = []
    for (q, t), per_n in sorted(_collect(rows).items()):
        for n in sorted(per_n):
            v = np.array([x for _, x in sorted(per_n[n])])
            se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
            table.append((q, n, t, float(v.mean()), se, float(np.sqrt(np.mean(v**2))), v.size))
    return table


def _stat_by_n(collected, q, t, fn=lambda v: float(np.mean(np.abs(v)))):
    per_n = collected.get((q, t), {})
    return [(n, fn(np.array([x for _, x in per_n[n]]))) for n in sorted(per_n)]


def _decreasing(series, slack):
    return all(b[1] < slack * a[1] if slack == 1.0 else b[1] <= slack * a[1]
               for a, b in zip(series, series[1:]))


def _fmt(series):
    return ", ".join(f"N={n}: {v:.3e}" for n, v in series)


def _max_check(name, collected, prefix, tol):
    vals = [(q, t, n, v) for (q, t), per_n in collected.items() if q.startswith(prefix)
            for n, lst in per_n.items() for _, v in lst]
    if not vals:
        return Check(name, False, "no rows")
    worst = max(vals, key=lambda x: x[3])
    return Check(name, worst[3] <= tol, f"max {worst[3]:.3e} ({worst[0]}, N={worst[2]}, t={worst[1]}) vs {tol:.1e}")


def evaluate(cfg: ExperimentConfig, rows, extras) -> tuple[list[Check], list]:
    """Checks of the experiment and the slope fits ``(quantity, t, fit)``."""
    col = _collect(rows)
    checks: list[Check] = []
    fits = []
    quantities = sorted({q for q, _ in col})

    def fit(q, t, statistic="mean_abs"):
        data = [(n, s, v) for n, lst in col.get((q, t), {}).items() for s, v in lst]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                f = convergence_table(data, statistic)
        except ValueError:
            return None
        fits.append((q, t, f))
        return f

    if cfg.kind == "conservation":
        tol = cfg.tol("conservation")
        for pre in ("H_drift", "I_drift", "Ek_drift", "Ek_reprojected_drift"):
            checks.append(_max_check(pre, col, pre, tol))
    elif cfg.kind == "equilibrium_exactness":
        tol = cfg.tol("equilibrium")
        checks += [_max_check("var_p", col, "var_p_dev", tol), _max_check("var_r", col, "var_r_dev", tol)]
    elif cfg.kind in ("convergence", "frozen_temperature"):
        if cfg.kind == "convergence":
            tracked = [q for q in quantities if "_err[" in q]
            slack = cfg.tol("decrease_slack")
        else:
            tracked = [q for q in quantities if q.startswith("F_drift")]
            slack = cfg.tol("frozen_slack")
        for q in tracked:
            for t in cfg.times:
                if t == 0 and cfg.kind == "frozen_temperature":
                    continue
                series = _stat_by_n(col, q, t)
                if len(series) >= 2:
                    checks.append(Check(f"decrease {q} t={t:g}", _decreasing(series, slack),
                                        f"{_fmt(series)}; slack {slack}"))
                f = fit(q, t)
                if f and cfg.kind == "convergence" and q.split("_")[0] in cfg.opt("slope_fields"):
                    checks.append(Check(f"slope {q} t={t:g}", f.slope <= cfg.tol("max_slope"),
                                        f"{f.slope:.3f} +- {f.stderr:.3f} vs <= {cfg.tol('max_slope')}"))
    elif cfg.kind == "localization":
        rates = _stat_by_n(col, "pass_rate", 0.0, lambda v: float(np.mean(v)))
        ref_n = cfg.opt("threshold_N") or max(cfg.N)
        ref = dict(rates).get(ref_n)
        thr = cfg.tol("pass_rate_threshold")
        checks.append(Check(f"pass rate N={ref_n}", ref is not None and ref >= thr,
                            f"{ref if ref is None else f'{ref:.3f}'} vs threshold {thr}"))
        slack = cfg.tol("trend_slack")
        checks.append(Check("pass rate trend", all(b[1] >= a[1] - slack for a, b in zip(rates, rates[1:])),
                            f"{_fmt(rates)}; slack {slack}"))
        if cfg.opt("clean_control"):
            ctrl = []
            for n in cfg.N:
                mf = sample_masses(MassLaw.constant(cfg.mass_law.mean), n, 0)
                ctrl.append((n, support_pass_rate(eigendecompose(mf), cfg.alpha, cfg.gamma)))
            extras.setdefault("_control", ctrl)
            cmax = cfg.tol("clean_control_max")
            checks.append(Check("clean control", all(v <= cmax for _, v in ctrl), f"{_fmt(ctrl)} vs <= {cmax}"))
        rate_data = [e["rates"] for e in extras.get("cells", []) if "rates" in e]
        if rate_data:
            omegas = np.concatenate([w for w, _ in rate_data])
            rr = np.concatenate([r for _, r in rate_data])
            m_min = min(e["m_min"] for e in extras["cells"] if "m_min" in e)
            top = 2.0 / math.sqrt(m_min)
            lo, hi = cfg.opt("omega_window")
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prof = band_average(omegas, rr, cfg.opt("band_count"), (lo * top, hi * top))
            extras["_zeta"] = prof
            target, tol = cfg.tol("zeta_slope"), cfg.tol("zeta_slope_tol")
            if len(prof) >= 2:
                s = loglog_slope(prof)
                checks.append(Check("zeta slope", abs(s - target) <= tol, f"{s:.3f} vs {target} +- {tol}"))
            else:
                checks.append(Check("zeta slope", False, "fewer than 2 usable bands"))
    elif cfg.kind == "averaging":
        target, tol = cfg.tol("averaging_slope"), cfg.tol("averaging_slope_tol")
        for t in cfg.times:
            f = fit("A1", t, "rms")
            if f:
                checks.append(Check(f"A1 rms slope t={t:g}", abs(f.slope - target) <= tol,
                                    f"{f.slope:.3f} +- {f.stderr:.3f} vs {target} +- {tol}"))
        tf = parse_test_function(cfg.opt("f"))
        ctrl = 0.0
        for n in cfg.N:
            mf = sample_masses(MassLaw.constant(cfg.mass_law.mean), n, 0)
            ens = Ensemble(eigendecompose(mf), initial_moments(cfg.profiles, mf), covariance=False)
            for t in cfg.times:
                ctrl = max(ctrl, *map(abs, averaging_sums(take_snapshot(ens, t * n, False), tf)))
        checks.append(Check("constant-mass control", ctrl == 0.0, f"max |A| = {ctrl:.3e}"))
        which = "apriori_literal_violations" if cfg.opt("apriori_bound") == "literal" else "apriori_weighted_violations"
        checks.append(_max_check(f"a priori bounds ({cfg.opt('apriori_bound')})", col, which, 0.0))
    elif cfg.kind == "clean_chain":
        checks.append(_max_check("wigner identity", col, "wigner_identity_err", cfg.tol("wigner")))
        if any(q == "exact_deviation" for q, _ in col):
            checks.append(_max_check("exact covariance", col, "exact_deviation", cfg.tol("exact_covariance")))
        if any(q == "mc_deviation" for q, _ in col):
            bound = cfg.tol("mc_sigmas") / (cfg.opt("beta") * math.sqrt(cfg.opt("samples")))
            checks.append(_max_check("monte carlo covariance", col, "mc_deviation", bound))
        target, slack = cfg.tol("approx_ratio"), cfg.tol("approx_ratio_slack")
        for t in cfg.times:
            if t == 0:
                continue
            series = _stat_by_n(col, "approx_error", t)
            ratios = [b[1] / a[1] for a, b in zip(series, series[1:]) if b[0] == 2 * a[0] and a[1] > 0]
            ok = bool(ratios) and all(abs(r / target - 1) <= slack for r in ratios)
            checks.append(Check(f"approx error ratio t={t:g}", ok,
                                f"ratios {', '.join(f'{r:.3f}' for r in ratios)} vs {target} +- {slack:.0%}"))
            fit("approx_error", t)
    return checks, fits


# ---------------------------------------------------------------- output

def _header(fh):
    fh.write(f"# schema={SCHEMA}\n")
    fh.write(f"# generated={_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        _header(fh)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _slug(q: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", q).strip("_")


def _plot(path, q, t, fit: ConvergenceFit):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "chain-hydro"
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    Ns = np.array(fit.Ns, dtype=float)
    ax.loglog(Ns, fit.values, "o-", label="data")
    ref = fit.values[0] * (Ns / Ns[0]) ** fit.slope
    ax.loglog(Ns, ref, "--", label=f"slope {fit.slope:.2f}")
    ax.set_xlabel("N")
    ax.set_ylabel(q)
    ax.set_title(f"{q}, t={t:g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def output_dir(cfg: ExperimentConfig, override: str | None = None) -> Path:
    return Path(override or cfg.out or os.environ.get(ENV_OUT) or "runs")


def run_experiment(cfg: ExperimentConfig, out: str | None = None, workers: int | None = None,
                   verbose: bool = True) -> int:
    """Run every (N, seed) cell, write the artifacts and return the exit status."""
    out_dir = output_dir(cfg, out)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = workers or cfg.workers
    cells = [(n, s) for n in cfg.N for s in cfg.seeds]
    results, errors = {}, []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {c: pool.submit(run_cell, cfg, *c) for c in cells}
            for c, fut in futs.items():
                try:
                    results[c] = fut.result()
                except Exception as exc:  # noqa: BLE001 - reported below
                    errors.append((c, exc))
    else:
        for c in cells:
            try:
                results[c] = run_cell(cfg, *c)
            except Exception as exc:  # noqa: BLE001
                errors.append((c, exc))

    rows = []
    for n, seed in cells:
        if (n, seed) in results:
            for t, q, v in results[(n, seed)][0]:
                rows += field_rows(cfg.name, n, seed, t, {q: v})
    _write_csv(out_dir / f"{cfg.name}_rows.csv", ["experiment_id", "N", "seed", "t", "quantity", "value"], rows)
    if errors:
        for (n, seed), exc in errors:
            print(f"cell N={n} seed={seed} failed: {exc!r}", file=sys.stderr)
        print(f"partial results written to {out_dir}", file=sys.stderr)
        return 1

    extras = {"cells": [results[c][1] for c in cells]}
    checks, fits = evaluate(cfg, rows, extras)

    summary = summarize(rows)
    _write_csv(out_dir / f"{cfg.name}_summary.csv",
               ["quantity", "N", "t", "mean", "stderr", "rms", "seeds"], summary)
    _write_csv(out_dir / f"{cfg.name}_fits.csv", ["quantity", "t", "slope", "stderr", "points", "excluded"],
               [(q, t, f.slope, f.stderr, len(f.Ns), f.excluded) for q, t, f in fits])
    _write_csv(out_dir / f"{cfg.name}_checks.csv", ["check", "passed", "detail"],
               [(c.name, "pass" if c.passed else "FAIL", c.detail) for c in checks])
    for q, t, f in fits:
        _plot(out_dir / f"{cfg.name}_{_slug(q)}_t{_slug(f'{t:g}')}.svg", q, t, f)

    if cfg.kind == "localization":
        mode_rows = [r for e in extras["cells"] for r in e.get("modes", [])]
        _write_csv(out_dir / f"{cfg.name}_modes.csv",
                   ["N", "seed", "k", "omega", "center", "outside_max", "ipr", "pass"],
                   [(*r[:7], int(r[7])) for r in mode_rows])
        if "_zeta" in extras:
            _write_csv(out_dir / f"{cfg.name}_zeta.csv", ["omega_mid", "zeta"], extras["_zeta"])
    if cfg.kind == "clean_chain":
        for (n, seed), (_, ex) in results.items():
            if "wavefield" in ex:
                clean.export_wavefield(ex["wavefield"], out_dir / f"{cfg.name}_wavefield_N{n}.csv")

    if verbose:
        print(f"{cfg.name} ({cfg.kind}): {len(cells)} cells -> {out_dir}")
        width = max((len(c.name) for c in checks), default=10)
        for c in checks:
            print(f"  {'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
    return 0 if all(c.passed for c in checks) else 1


# ---------------------------------------------------------------- CLI

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chain-hydro", description="Disordered harmonic chain experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", help=f"output directory (default: config 'out', ${ENV_OUT}, ./runs)")
    run.add_argument("--workers", type=int, help="worker processes over (N, seed) cells")
    run.add_argument("--seed-override", type=int, help="replace the seed list by this single seed")
    val = sub.add_parser("validate", help="parse and check a config without running it")
    val.add_argument("config")
    sub.add_parser("list-experiments", help="list the experiment kinds")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-experiments":
        for k, d in KINDS.items():
            print(f"{k:<22} {d}")
        return 0
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"{args.config}: ok ({cfg.kind}, N={list(cfg.N)}, seeds={list(cfg.seeds)}, t={list(cfg.times)})")
        return 0
    if args.workers is not None and args.workers < 1:
        print("config error: --workers must be positive", file=sys.stderr)
        return 2
    if args.seed_override is not None:
        cfg = replace(cfg, seeds=(args.seed_override,))
    return run_experiment(cfg, out=args.out, workers=args.workers)


if __name__ == "__main__":
    raise SystemExit(main())
