import numpy as np
import pytest
from conftest import ikeda_manifold, ikeda_setup, reduced_ikeda

from chebdde import chebseq as cs
from chebdde import manifold


def test_coefficient_count_and_scaling():
    P = ikeda_manifold()
    assert P.coefficient_count == 3968
    assert 1e-14 <= manifold.top_order_norm(P) <= 1e-10
    assert P.min_sigma > 1e-10


def test_conjugacy_on_real_slice():
    ik, _, _ = ikeda_setup()
    P = ikeda_manifold()
    assert manifold.conjugacy_residual(P, ik, np.linspace(-0.9, 0.9, 10)) <= 1e-8


def test_mobius_identity():
    ik, _, _ = ikeda_setup()
    P = ikeda_manifold()
    assert manifold.mobius_residual(P, ik, np.linspace(-0.8, 0.8, 5)) <= 1e-7


def test_real_slice_is_real():
    P = ikeda_manifold()
    for j in range(1, P.m + 1):
        assert np.abs(np.imag(P.real_slice(j, 0.7))).max() <= 1e-12


def test_ikeda_K_blocks_have_the_displayed_form():
    ik, o, _, _ = reduced_ikeda()
    K1, K2 = manifold.assemble_K1_K2(o, ik)
    assert np.abs(K1).max() == 0  # the cubic Ikeda field has no instantaneous term
    N, B = o.N, o.N + 1
    E = cs.eval_matrix(N)
    for j in range(1, o.m + 1):
        c = o.segment(j - 1)[0]
        coef = 0.5 * o.tau * cs.add(np.array([1.0]), -3 * cs.conv(c, c))
        expected = E + cs.integ_mult_matrix(coef, N)
        col = (j - 2) % o.m
        assert np.allclose(K2[(j - 1) * B : j * B, col * B : (col + 1) * B], expected, atol=1e-14)


def test_first_order_is_eigen_chain():
    ik, o, fd, P = reduced_ikeda()
    K1, K2 = manifold.assemble_K1_K2(o, ik)
    v = P.p[:, 0, 1, :].reshape(-1)
    lam = P.lam[0]
    assert np.abs(lam * (np.eye(v.size) - K1) @ v - K2 @ v).max() <= 1e-10 * np.abs(v).max()


def test_rescaling_is_homogeneous():
    ik, o, fd, P = reduced_ikeda()
    Q = manifold.rescale(P, factor=0.5)
    s = np.array([0.3])
    assert np.allclose(P.evaluate(2, 0.5 * s), Q.evaluate(2, s), atol=1e-14)


def test_resonance_is_reported(monkeypatch):
    ik, o, fd, _ = reduced_ikeda()
    monkeypatch.setattr(manifold, "LU", lambda A: (_ for _ in ()).throw(manifold.SingularMatrixError("x")))
    with pytest.raises(manifold.ResonanceError):
        manifold.solve_manifold(o, fd, order=3, model=ik)


def test_boundary_point_already_close_gives_k_zero():
    ik, _, _ = ikeda_setup()
    r = manifold.grow_boundary(ikeda_manifold(), ik, 3, tol=1.0, samples=4, refinements=1, polish=False)
    assert r.k == 0 and r.iterations == 1


def test_no_return_raises():
    ik, _, _ = ikeda_setup()
    with pytest.raises(manifold.NoReturnError, match="no return within"):
        manifold.grow_boundary(ikeda_manifold(), ik, 1, tol=1e-12, samples=4, refinements=1, polish=False)


def test_shift_decomposition():
    _, orbit, _ = ikeda_setup()
    sh = manifold.OrbitShifter(orbit)
    tau = orbit.tau
    j, theta, phase = sh.decompose(6 * tau + 0.3 * tau)
    assert j == 6 and np.isclose(theta, 0.3 * tau)
    assert np.isclose(phase, sh.values(np.array([theta]))[0])
    # window(T) at a segment boundary is that segment
    w = sh.window(3 * tau)
    ref = np.real(cs.eval_points(orbit.segment(3)[0], sh.t))
    assert np.abs(w - ref).max() < 1e-13
    d, T = sh.distance(orbit.segment(5))
    assert d < 1e-10 and np.isclose(T % sh.period, 5 * tau, atol=1e-8)


def test_growth_profile_reaches_a_close_return():
    from conftest import ikeda_growth

    r = ikeda_growth()
    assert r.distance <= 1e-5
    assert r.iterations == r.k + 1
    assert len(r.distances) == r.k + 1
