import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.polynomial import chebyshev as npcheb

from chebdde import chebseq as cs


def to_standard(a):
    """Our ``a0 + 2 sum`` coefficients to numpy's plain Chebyshev coefficients."""
    c = 2.0 * np.asarray(a, dtype=float)
    c[0] = a[0]
    return c


def from_standard(c):
    a = np.asarray(c, dtype=float) / 2.0
    a[0] = c[0]
    return a


def unit(k, N=12):
    a = np.zeros(N + 1)
    if k == 0:
        a[0] = 1.0
    else:
        a[k] = 0.5  # T_k itself
    return a


@pytest.mark.parametrize("k", range(11))
def test_S_reproduces_antiderivative_of_Tk(k):
    # independent oracle: numpy's chebint with the lower bound at -1
    std = np.zeros(k + 1)
    std[k] = 1.0
    expected = from_standard(npcheb.chebint(std, lbnd=-1))
    got = cs.integ_op_S(unit(k, k))
    n = max(len(expected), len(got))
    assert np.abs(cs.pad(got, n - 1) - cs.pad(expected, n - 1)).max() <= 1e-14


def test_E_matches_clenshaw_at_one():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = rng.standard_normal(20) / (1 + np.arange(20)) ** 2
        e = cs.eval_op_E(a)
        assert np.all(e[1:] == 0)
        assert abs(e[0] - npcheb.chebval(1.0, to_standard(a))) <= 1e-14


def test_conv_matches_pointwise_products():
    rng = np.random.default_rng(2)
    t = np.linspace(-1, 1, 41)
    for _ in range(100):
        a = rng.standard_normal(9)
        b = rng.standard_normal(12)
        prod = cs.conv(a, b)
        lhs = cs.eval_points(prod, t)
        rhs = cs.eval_points(a, t) * cs.eval_points(b, t)
        assert np.abs(lhs - rhs).max() <= 1e-13 * max(1.0, np.abs(rhs).max())


def test_eval_points_agrees_with_numpy():
    a = np.array([0.3, -0.2, 0.1, 0.05, -0.01])
    t = np.linspace(-1, 1, 7)
    assert np.allclose(cs.eval_points(a, t), npcheb.chebval(t, to_standard(a)), atol=1e-15)


def test_derivative_inverts_S():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(10)
    assert np.allclose(cs.derivative(cs.integ_op_S(a)), a, atol=1e-13)


def test_from_values_interpolates():
    a = cs.from_function(np.cos, 20)
    t = np.linspace(-1, 1, 11)
    assert np.abs(cs.eval_points(a, t) - np.cos(t)).max() < 1e-14


small = arrays(np.float64, st.integers(1, 10), elements=st.floats(-1, 1))


@settings(max_examples=60, deadline=None)
@given(small, small)
def test_conv_commutes(a, b):
    assert np.allclose(cs.conv(a, b), cs.conv(b, a), atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(small, small)
def test_mult_matrix_is_conv(a, b):
    N = len(b) - 1
    assert np.allclose(cs.mult_matrix(a, N) @ b, cs.conv(a, b), atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(small, small)
def test_integ_mult_matrix_is_S_of_product(a, b):
    N = len(b) - 1
    lhs = cs.integ_mult_matrix(a, N) @ b
    rhs = cs.truncate(cs.pad(cs.integ_op_S(cs.conv(a, b)), N), N)
    assert np.allclose(lhs, rhs, atol=1e-13)


@settings(max_examples=60, deadline=None)
@given(small)
def test_S_starts_at_zero_and_E_reads_the_endpoint(a):
    s = cs.integ_op_S(a)
    assert abs(cs.eval_point(s, -1.0)) <= 1e-13
    assert abs(cs.eval_op_E(a)[0] - cs.eval_point(a, 1.0)) <= 1e-13


@settings(max_examples=40, deadline=None)
@given(small)
def test_eval_matrix_matches_operator(a):
    N = len(a) - 1
    assert np.allclose(cs.eval_matrix(N) @ a, cs.eval_op_E(a), atol=1e-14)


def test_norm_l1nu_weights():
    assert cs.norm_l1nu(np.array([1.0, -1.0, 0.5])) == 1 + 2 + 1
    with pytest.raises(ValueError):
        cs.norm_l1nu(np.ones(3), nu=0.5)


def test_eval_point_rejects_outside():
    with pytest.raises(ValueError):
        cs.eval_point(np.ones(3), 1.5)
