"""Cubic Ikeda: from a chaotic time series to a parameterized unstable manifold.

Run: python3 demos/ikeda_orbit_and_manifold.py
"""
from importlib import resources

import numpy as np

from chebdde import chebseq as cs
from chebdde import floquet_analysis, ikeda_model, manifold, newton_periodic, orbit_from_samples, solve_manifold

ik = ikeda_model()  # u' = u(t - tau) - u(t - tau)**3

# A sampled stretch of a long simulation sits near an unstable periodic
# orbit of period about 8 delays. Cut it into 8 Chebyshev pieces of order 30
# and let Newton pull the guess onto the orbit while the delay floats.
data = np.loadtxt(resources.files("chebdde").joinpath("data", "ikeda_seed.csv"), delimiter=",", skiprows=1)
guess = orbit_from_samples(data[:, 0], data[:, 1], 1.565, m=8, N=30, model=ik, delta=0.0, crossing=0)
orbit, rep = newton_periodic(guess, ik, 0.0)
print(f"delay tau = {orbit.tau:.16f} after {rep.iterations} Newton steps, residual {rep.final_residual:.1e}")

# Coefficients decay geometrically, which is what justifies N = 30.
tail = max(np.abs(orbit.segments[j, 0, -3:]).max() for j in range(orbit.m))
print(f"largest of the last three Chebyshev coefficients: {tail:.1e}")

# Multipliers of the linearized period map. One unstable, one at 1 (time
# shift), the rest stable.
fd = floquet_analysis(orbit, ik)
print(f"multiplier counts (unstable, center, stable) = {fd.counts}, unstable mu = {fd.mu[0].real:.12f}")

# The unstable multiplier is negative, so the manifold is a Mobius strip.
# Order 15 in the manifold coordinate, with the eigenvector scaled so the
# last Taylor coefficient is tiny.
P = solve_manifold(orbit, fd, order=15, model=ik)
print(f"{P.coefficient_count} stored coefficients, scaling gamma = {P.gamma[0]:.4g}")
print(f"conjugacy residual on |s| <= 0.9: {manifold.conjugacy_residual(P, ik, np.linspace(-0.9, 0.9, 10)):.1e}")
print(f"Mobius identity residual: {manifold.mobius_residual(P, ik, np.linspace(-0.8, 0.8, 5)):.1e}")

# Points on the real slice are genuine history segments; evaluate a few.
t = np.linspace(-1, 1, 5)
for s in (-0.9, 0.0, 0.9):
    print(f"s = {s:+.1f}:", np.round(np.real(cs.eval_points(P.real_slice(1, s)[0], t)), 6))
