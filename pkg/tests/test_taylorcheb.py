import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chebdde import chebseq as cs
from chebdde import taylorcheb as tc


def test_multi_index_counts_and_order():
    mis = tc.multi_indices(2, 3)
    assert mis.size == 10
    assert mis.indices[0] == (0, 0)
    assert list(mis.degree) == sorted(mis.degree)
    assert mis.indices[mis.unit(1)] == (0, 1)


def test_one_direction_is_plain_powers():
    mis = tc.multi_indices(1, 15)
    assert mis.size == 16
    assert np.allclose(mis.monomials([0.5]), 0.5 ** np.arange(16))


def _series(rng, mis, N):
    return rng.standard_normal((mis.size, N + 1)) / (1 + np.arange(N + 1)) ** 2


@pytest.mark.parametrize("n_u", [1, 2])
def test_conv2_evaluates_to_product(n_u):
    rng = np.random.default_rng(4)
    mis = tc.multi_indices(n_u, 4)
    a, b = _series(rng, mis, 5), _series(rng, mis, 6)
    c = tc.conv2(a, b, mis)
    sigma = np.full(n_u, 0.01)  # small so the dropped high orders are negligible
    t = np.linspace(-1, 1, 9)
    lhs = cs.eval_points(tc.eval_taylor(c, sigma, mis), t)
    rhs = cs.eval_points(tc.eval_taylor(a, sigma, mis), t) * cs.eval_points(tc.eval_taylor(b, sigma, mis), t)
    assert np.abs(lhs - rhs).max() < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_conv2_general_path_matches_fast_path(seed):
    # the n_u = 1 fast path and the product table must agree
    rng = np.random.default_rng(seed)
    mis = tc.multi_indices(1, 5)
    a, b = _series(rng, mis, 4), _series(rng, mis, 3)
    fast = tc.conv2(a, b, mis)
    slow = np.zeros_like(fast)
    for i, j, k in mis.product_table():
        slow[k] += cs.conv(a[i], b[j])
    assert np.allclose(fast, slow, atol=1e-14)


def test_lambda_powers_and_scale():
    mis = tc.multi_indices(1, 3)
    lam = 2.0 + 1.0j
    assert np.allclose(tc.lambda_powers(lam, mis), lam ** np.arange(4))
    a = np.ones((4, 2))
    assert np.allclose(tc.scale_L(lam, a, mis)[:, 0], lam ** np.arange(4))


def test_taylor_truncate():
    mis = tc.multi_indices(1, 4)
    a = np.ones((5, 3))
    out = tc.taylor_truncate(a, 2, mis)
    assert np.all(out[3:] == 0) and np.all(out[:3] == 1)


def test_mismatched_slices_rejected():
    with pytest.raises(ValueError):
        tc.eval_taylor(np.ones((3, 2)), 0.1, tc.multi_indices(1, 5))


def test_eval_outside_disk_warns():
    with pytest.warns(UserWarning):
        tc.eval_taylor(np.ones((3, 2)), 1.5)
