"""Shared, session-cached fixtures for the two worked examples.

The expensive objects (orbits, manifolds, the Ikeda connection) are built
once per test session and reused by the module tests and the acceptance
suite.
"""

from __future__ import annotations

import warnings
from functools import lru_cache
from importlib import resources

import numpy as np
import pytest

from chebdde import floquet, homoclinic, manifold, models, periodic

IKEDA_TAU = 1.5649592985680902
IKEDA_MU = -4.624622928960324
MG_TAU = 1.827334864516779
MG_MU = -2.7747991365286633


def _seed(name):
    path = resources.files("chebdde").joinpath("data", name)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 0], data[:, 1]


@lru_cache(maxsize=None)
def ikeda_setup():
    ik = models.ikeda_model()
    t, w = _seed("ikeda_seed.csv")
    guess = periodic.orbit_from_samples(t, w, 1.565, 8, 30, ik, 0.0, crossing=0)
    orbit, rep = periodic.newton_periodic(guess, ik, 0.0)
    return ik, orbit, rep


@lru_cache(maxsize=None)
def ikeda_floquet():
    ik, orbit, _ = ikeda_setup()
    return floquet.floquet_analysis(orbit, ik)


@lru_cache(maxsize=None)
def ikeda_manifold():
    ik, orbit, _ = ikeda_setup()
    return manifold.solve_manifold(orbit, ikeda_floquet(), order=15, model=ik)


@lru_cache(maxsize=None)
def ikeda_growth(k=None):
    ik, _, _ = ikeda_setup()
    return manifold.grow_boundary(ikeda_manifold(), ik, 20, tol=1e-5, k=k)


@lru_cache(maxsize=None)
def ikeda_connection():
    """Connection with the step count and piece of the reference run (k = 16, j* = 7)."""
    ik, _, _ = ikeda_setup()
    r = ikeda_growth(16)
    prob, seed = homoclinic.seed_homoclinic(ikeda_manifold(), ik, r, j_star=7)
    return prob, seed, homoclinic.solve_homoclinic(prob, seed)


@lru_cache(maxsize=None)
def mg_setup(N=45):
    mg = models.mackey_glass_model(1.0, 2.0, 9.65)
    t, w = _seed("mackey_glass_seed.csv")
    guess = periodic.orbit_from_samples(t, w, 1.827, 6, N, mg, 1.0, crossing=2)
    orbit, rep = periodic.newton_periodic(guess, mg, 1.0)
    return mg, orbit, rep


@lru_cache(maxsize=None)
def mg_floquet(N=45):
    mg, orbit, _ = mg_setup(N)
    return floquet.floquet_analysis(orbit, mg)


@lru_cache(maxsize=None)
def mg_manifold(N=45):
    mg, orbit, _ = mg_setup(N)
    return manifold.solve_manifold(orbit, mg_floquet(N), order=15, model=mg)


@lru_cache(maxsize=None)
def mg_growth(N=45):
    mg, _, _ = mg_setup(N)
    return manifold.grow_boundary(mg_manifold(N), mg, 50, tol=1e-5)


@lru_cache(maxsize=None)
def mg_connection(N=45):
    mg, _, _ = mg_setup(N)
    # Three orbit periods past the detected return: |h|_1 stops shrinking there.
    growth = mg_growth(N)
    prob, seed = homoclinic.seed_homoclinic(mg_manifold(N), mg, growth, k=growth.k + 3 * 6)
    return prob, seed, homoclinic.solve_homoclinic(prob, seed, linear_solver="structured")


@lru_cache(maxsize=None)
def reduced_ikeda(N=8, order=3):
    """Small Ikeda instance for derivative and structure checks."""
    ik, orbit, _ = ikeda_setup()
    o = periodic.SegmentedOrbit(orbit.tau, np.array(orbit.segments[:, :, : N + 1]), orbit.eta, orbit.delta)
    o, _ = periodic.newton_periodic(o, ik, 0.0)
    fd = floquet.floquet_analysis(o, ik)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        P = manifold.solve_manifold(o, fd, order=order, model=ik)
    return ik, o, fd, P


@pytest.fixture(autouse=True)
def _quiet_disk_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="evaluating a Taylor-Chebyshev series outside")
        yield
