"""Mackey-Glass: periodic orbit of the polynomial embedding and its multipliers.

The nonlinearity w / (1 + w**rho) is not polynomial, so the solver works
with three extra coordinates v1 = w / (1 + w**rho), v2 = w**(rho - 2),
v3 = 1 / w and three unfolding parameters that must come out zero.

Run: python3 demos/mackey_glass_orbit.py
"""
from importlib import resources

import numpy as np

from chebdde import chebseq as cs
from chebdde import floquet_analysis, mackey_glass_model, newton_periodic, orbit_from_samples, stepper

mg = mackey_glass_model(a=1.0, b=2.0, rho=9.65)

# The embedding is only valid while it stays consistent; check it along a
# free trajectory from a constant history.
phi = np.zeros((4, 46))
phi[:, 0] = np.concatenate([[1.2], mg.phi_at_point(1.2)])
segs = stepper.iterate(phi, 1.827, mg, 45, k=30)
t = np.linspace(-1, 1, 40)
defect = max(np.abs(cs.eval_points(s[1], t) * (1 + cs.eval_points(s[0], t) ** 9.65) - cs.eval_points(s[0], t)).max() for s in segs)
print(f"embedding defect along 30 delays: {defect:.1e}")

data = np.loadtxt(resources.files("chebdde").joinpath("data", "mackey_glass_seed.csv"), delimiter=",", skiprows=1)
guess = orbit_from_samples(data[:, 0], data[:, 1], 1.827, m=6, N=45, model=mg, delta=1.0, crossing=2)
orbit, rep = newton_periodic(guess, mg, 1.0)
print(f"delay tau = {orbit.tau:.15f}, unfolding parameters {np.abs(orbit.eta).max():.1e}")

# Each embedded coordinate adds a multiplier at 1, so four center
# multipliers instead of one.
fd = floquet_analysis(orbit, mg)
print(f"multiplier counts (unstable, center, stable) = {fd.counts}, unstable mu = {fd.mu[0].real:.12f}")
