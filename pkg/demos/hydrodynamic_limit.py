"""Watching the empirical fields follow the Euler system.

Starts the chain in a local Gibbs state with a temperature profile and
macroscopic stretch and momentum profiles, evolves the exact Gaussian
ensemble to microscopic time t N, and compares the empirical stretch,
momentum and energy fields against the macroscopic wave equation.  The
thermal part of the energy barely moves: temperature stays frozen.

    python demos/hydrodynamic_limit.py [outdir]
"""
import sys
import warnings
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from chain_hydro import (Ensemble, MassLaw, TestFunction, canonical_profiles, eigendecompose,
                         empirical_field, energy_split, initial_moments, limit_field, sample_masses,
                         solve_wave, take_snapshot)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)
law = MassLaw.uniform(0.8, 1.2)
profiles = canonical_profiles()
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    macro = solve_wave(profiles, law.mean)
f = TestFunction.sine(2)

print("   N      t   |R_N - r|   |P_N - p|   |E_N - e|   F_N(t) - F_N(0)")
for n in (256, 512, 1024):
    mf = sample_masses(law, n, 1)
    ens = Ensemble(eigendecompose(mf), initial_moments(profiles, mf))
    F0 = energy_split(take_snapshot(ens, 0.0), f)[1]
    for t in (0.25, 0.5, 1.0):
        snap = take_snapshot(ens, t * n)
        errs = [abs(empirical_field(snap, f, w) - limit_field(macro, f, t, w)) for w in ("R", "P", "E")]
        drift = energy_split(snap, f)[1] - F0
        print(f"{n:5d} {t:6.2f}   " + "   ".join(f"{e:.2e}" for e in errs) + f"   {drift:+.2e}")

# stretch profile of one replica next to the macroscopic solution
n = 1024
mf = sample_masses(law, n, 1)
ens = Ensemble(eigendecompose(mf), initial_moments(profiles, mf), covariance=False)
y = np.arange(1, n) / n
fig, ax = plt.subplots(figsize=(6, 3.5))
for t, c in ((0.0, "C0"), (0.5, "C1"), (1.0, "C2")):
    snap = take_snapshot(ens, t * n, False)
    ax.plot(y, snap.mean_r, c, lw=0.6, alpha=0.6)
    ax.plot(y, macro.r(y, t), c + "--", label=f"t = {t}")
ax.set_xlabel("y")
ax.set_ylabel("mean stretch")
ax.legend()
fig.tight_layout()
fig.savefig(out / "hydrodynamic_limit.png", dpi=120)
print(f"figure -> {out / 'hydrodynamic_limit.png'}")
