import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebdde import linsolve as ls


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1), st.booleans())
def test_lu_solves_and_transposes(n, seed, cplx):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + n * np.eye(n)
    if cplx:
        A = A + 1j * rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    lu = ls.LU(A)
    assert np.allclose(A @ lu.solve(b), b)
    assert np.allclose(A.T @ lu.solve(b, trans=1), b)
    assert np.allclose(A.conj().T @ lu.solve(b, trans=2), b)


def test_rcond_tracks_exact_condition():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((20, 20))
    exact = 1 / (np.linalg.norm(A, 1) * np.linalg.norm(np.linalg.inv(A), 1))
    est = ls.rcond(A)
    assert exact / 10 <= est <= exact * 10


def test_singular_matrix_detected():
    A = np.ones((3, 3))
    with pytest.raises(ls.SingularMatrixError):
        ls.LU(A)


def test_newton_converges_quadratically():
    F = lambda x: np.array([x[0] ** 2 - 2.0, x[1] ** 3 - 3.0])
    J = lambda x: np.diag([2 * x[0], 3 * x[1] ** 2])
    x, rep = ls.newton(F, J, np.array([1.0, 1.0]), tol=1e-14)
    assert np.allclose(x, [np.sqrt(2), 3 ** (1 / 3)])
    assert rep.converged and rep.quadratic_tail


def test_newton_reports_failure():
    F = lambda x: np.array([x[0] ** 2 + 1.0])
    J = lambda x: np.array([[2 * x[0]]])
    with pytest.raises(ls.NewtonError):
        ls.newton(F, J, np.array([0.5]), maxiter=8)


def test_eig_sorted_by_modulus():
    w, V = ls.eig(np.diag([0.1, -3.0, 2.0]))
    assert np.allclose(np.abs(w), [3.0, 2.0, 0.1])
