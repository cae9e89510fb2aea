import numpy as np
import pytest

from chebdde import chebseq as cs
from chebdde import models, stepper

TAU = 1.5649592985680902


def ikeda_vs_oracle(steps=8, N=30, q=400):
    ik = models.ikeda_model()
    phi = np.zeros((1, N + 1))
    phi[0, 0] = 0.5
    segs = stepper.iterate(phi, TAU, ik, N, k=steps)
    h = TAU / q
    t, y = stepper.rk_oracle(np.full((1, q + 1), 0.5), TAU, ik, steps * TAU, h)
    err = 0.0
    for j, s in enumerate(segs):
        tt = t[j * q : (j + 1) * q + 1]
        loc = 2 * (tt - j * TAU) / TAU - 1
        err = max(err, np.abs(cs.eval_points(s[0], np.clip(loc, -1, 1)) - y[0, j * q : (j + 1) * q + 1]).max())
    return err


def test_ikeda_steps_match_rk4_oracle():
    assert ikeda_vs_oracle() <= 1e-7


def test_linear_decay_is_exact():
    # u' = -u from a constant history: u = e^{-(t+1) tau / 2} on the first step
    lin = models.linear_model(1.0)
    tau, N = 0.7, 20
    phi = np.zeros((1, N + 1))
    phi[0, 0] = 1.0
    seg = stepper.step(phi, tau, lin, N).segment
    t = np.linspace(-1, 1, 11)
    assert np.abs(cs.eval_points(seg[0], t) - np.exp(-(t + 1) * tau / 2)).max() < 1e-14


def test_step_defect_vanishes_at_solution():
    ik = models.ikeda_model()
    phi = np.zeros((1, 31))
    phi[0, 0] = 0.3
    phi[0, 1] = 0.05
    res = stepper.step(phi, TAU, ik, 30)
    assert np.abs(stepper.step_defect(res.segment, phi, TAU, ik, 30)).max() < 1e-13


def test_step_jacobian_against_differences():
    ik = models.ikeda_model()
    rng = np.random.default_rng(7)
    N = 10
    u = rng.standard_normal((1, N + 1)) * 0.1
    phi = rng.standard_normal((1, N + 1)) * 0.1
    J = stepper.step_jacobian(u, phi, TAU, ik, N)
    v = rng.standard_normal(J.shape[1])
    h = 1e-6
    dp = (stepper.step_defect(u + h * v.reshape(u.shape), phi, TAU, ik, N) - stepper.step_defect(u - h * v.reshape(u.shape), phi, TAU, ik, N)) / (2 * h)
    assert np.allclose(J @ v, dp.reshape(-1), atol=1e-8)


def test_segments_join_continuously():
    ik = models.ikeda_model()
    phi = np.zeros((1, 31))
    phi[0, 0] = 0.5
    segs = stepper.iterate(phi, TAU, ik, 30, k=5)
    prev = phi
    for s in segs:
        assert abs(cs.eval_point(s[0], -1.0) - cs.eval_point(prev[0], 1.0)) < 1e-12
        prev = s


def test_periodic_candidate_detection():
    from conftest import ikeda_setup

    _, orbit, _ = ikeda_setup()
    segs = list(orbit.segments) * 3
    m, delta, j = stepper.find_periodic_candidate(segs, tol=1e-8)
    assert m == 8 and j == 0
    assert abs(delta - orbit.delta) < 1e-10


def test_bad_delay_rejected():
    with pytest.raises(ValueError):
        stepper.step(np.zeros((1, 3)), -1.0, models.ikeda_model(), 2)
