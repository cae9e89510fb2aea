"""Chebyshev coefficient sequences under the ``a0 + 2 * sum`` convention.

A sequence ``a`` of length ``N + 1`` represents

    a(t) = a[0] + 2 * sum_{k >= 1} a[k] * T_k(t),   t in [-1, 1].

Sequences are plain numpy arrays. A vector-valued sequence (``VecChebSeq``)
is a 2-D array of shape ``(n, N + 1)``; every function here acts on the last
axis so the same routines serve scalars and vectors.

With this convention the product of two functions is the discrete
convolution of their two-sided (even) extensions, which is why products are
cheap and exact.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "order",
    "pad",
    "add",
    "conv",
    "power",
    "truncate",
    "eval_op_E",
    "integ_op_S",
    "eval_point",
    "eval_points",
    "derivative",
    "norm_l1nu",
    "mult_matrix",
    "integ_matrix",
    "eval_matrix",
    "integ_mult_matrix",
    "from_values",
    "from_function",
    "chebyshev_points",
]


def order(a: np.ndarray) -> int:
    """Truncation order ``N`` of a sequence (last-axis length minus one)."""
    return np.shape(a)[-1] - 1


def pad(a: np.ndarray, N: int) -> np.ndarray:
    """Zero-pad or cut the last axis of ``a`` to order ``N``."""
    a = np.asarray(a)
    cur = a.shape[-1]
    if cur == N + 1:
        return a
    if cur > N + 1:
        return a[..., : N + 1]
    width = [(0, 0)] * (a.ndim - 1) + [(0, N + 1 - cur)]
    return np.pad(a, width)


def add(*seqs: np.ndarray) -> np.ndarray:
    """Sum sequences of possibly different orders."""
    N = max(order(s) for s in seqs)
    out = pad(seqs[0], N).astype(np.result_type(*seqs), copy=True)
    for s in seqs[1:]:
        out = out + pad(s, N)
    return out


def _two_sided(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a[..., :0:-1], a], axis=-1)


def conv(a: np.ndarray, b: np.ndarray, N: int | None = None) -> np.ndarray:
    """Chebyshev product ``a * b``.

    The default output order is ``order(a) + order(b)``, which is exact.
    Passing ``N`` truncates (or pads) the result.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    Na, Nb = order(a), order(b)
    if a.ndim == 1 and b.ndim == 1:
        full = np.convolve(_two_sided(a), _two_sided(b))
    else:
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        A = np.broadcast_to(_two_sided(a), shape + (2 * Na + 1,)).reshape(-1, 2 * Na + 1)
        B = np.broadcast_to(_two_sided(b), shape + (2 * Nb + 1,)).reshape(-1, 2 * Nb + 1)
        full = np.stack([np.convolve(x, y) for x, y in zip(A, B)]).reshape(shape + (-1,))
    out = full[..., Na + Nb :]
    return out if N is None else pad(out, N)


def power(a: np.ndarray, k: int, N: int | None = None) -> np.ndarray:
    """``a`` convolved with itself ``k`` times (``k = 0`` gives the unit)."""
    out = np.zeros_like(a, shape=np.shape(a)[:-1] + (1,))
    out[..., 0] = 1
    for _ in range(k):
        out = conv(out, a)
    return out if N is None else pad(out, N)


def truncate(a: np.ndarray, N: int) -> np.ndarray:
    """Projection onto orders ``<= N``; the shape is kept."""
    out = np.array(a, copy=True)
    out[..., N + 1 :] = 0
    return out


def eval_op_E(a: np.ndarray) -> np.ndarray:
    """Evaluation at ``t = 1`` placed in entry 0 of an otherwise zero sequence."""
    a = np.asarray(a)
    out = np.zeros_like(a)
    out[..., 0] = a[..., 0] + 2 * a[..., 1:].sum(axis=-1)
    return out


def integ_op_S(a: np.ndarray) -> np.ndarray:
    """Coefficients of ``t -> int_{-1}^t a``; the output order is ``N + 1``."""
    a = np.asarray(a)
    N = order(a)
    ext = pad(a, N + 2)
    out = np.zeros(a.shape[:-1] + (N + 2,), dtype=a.dtype if a.dtype.kind == "c" else float)
    k = np.arange(1, N + 2)
    out[..., 1:] = (ext[..., :-2] - ext[..., 2:]) / (2 * k)
    beta = np.arange(2, N + 1)
    sign = np.where(beta % 2 == 0, 1.0, -1.0)
    tail = (sign * a[..., 2:] / (beta**2 - 1.0)).sum(axis=-1) if N >= 2 else 0.0
    a1 = a[..., 1] if N >= 1 else 0.0
    out[..., 0] = a[..., 0] - a1 / 2 - 2 * tail
    return out


def eval_point(a: np.ndarray, t: float) -> np.ndarray:
    """Clenshaw evaluation of ``a0 + 2 sum a_k T_k(t)`` for ``|t| <= 1``."""
    if abs(t) > 1 + 1e-14:
        raise ValueError(f"evaluation point {t} outside [-1, 1]")
    return eval_points(a, np.asarray([t]))[..., 0]


def eval_points(a: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Clenshaw evaluation at an array of points; returns shape ``a.shape[:-1] + t.shape``."""
    a = np.asarray(a)
    t = np.asarray(t, dtype=float)
    lead = a.shape[:-1]
    ae = a.reshape(lead + (1,) * t.ndim + (a.shape[-1],))
    b1 = np.zeros(lead + t.shape, dtype=np.result_type(a, t))
    b2 = np.zeros_like(b1)
    for k in range(a.shape[-1] - 1, 0, -1):
        b1, b2 = 2 * ae[..., k] + 2 * t * b1 - b2, b1
    return ae[..., 0] + t * b1 - b2


def derivative(a: np.ndarray) -> np.ndarray:
    """Coefficients of ``d/dt a``; the output order is ``N - 1`` (0 for constants)."""
    a = np.asarray(a)
    N = order(a)
    if N == 0:
        return np.zeros_like(a)
    # standard coefficients c_k = 2 a_k (k >= 1); derivative recurrence on c
    c = 2 * a.astype(np.result_type(a, float))
    c[..., 0] = a[..., 0]
    d = np.zeros(a.shape[:-1] + (N + 1,), dtype=c.dtype)
    for k in range(N, 0, -1):
        d[..., k - 1] = (d[..., k + 1] if k + 1 <= N else 0) + 2 * k * c[..., k]
    d[..., 0] /= 2
    out = d[..., :N] / 2
    out[..., 0] = d[..., 0]
    return out


def norm_l1nu(a: np.ndarray, nu: float = 1.0) -> float:
    """Weighted norm ``|a0| + 2 sum |a_k| nu^k`` (summed over components, if any)."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    a = np.asarray(a)
    w = 2.0 * float(nu) ** np.arange(a.shape[-1])
    w[0] = 1.0
    return float((np.abs(a) * w).sum())


def mult_matrix(a: np.ndarray, N: int, rows: int | None = None) -> np.ndarray:
    """Matrix of ``b -> a * b`` for ``b`` of order ``N``.

    Column 0 is ``a_|k|``, column ``j >= 1`` is ``a_|k-j| + a_{k+j}``. The
    default number of rows is ``order(a) + N + 1`` (exact product).
    """
    a = np.asarray(a)
    Na = order(a)
    K = Na + N if rows is None else rows - 1
    k = np.arange(K + 1)[:, None]
    j = np.arange(N + 1)[None, :]
    ext = pad(a, max(K + N, Na) + 1)
    out = ext[np.abs(k - j)] * ((np.abs(k - j) <= Na))
    hank = ext[np.minimum(k + j, len(ext) - 1)] * ((k + j) <= Na) * (j >= 1)
    return out + hank


def integ_matrix(K: int, N: int) -> np.ndarray:
    """Matrix of ``a -> truncate(S(a), N)`` for inputs of order ``K``."""
    M = np.zeros((N + 1, K + 1))
    M[0, 0] = 1.0
    if K >= 1:
        M[0, 1] = -0.5
    beta = np.arange(2, K + 1)
    M[0, 2:] = -2.0 * np.where(beta % 2 == 0, 1.0, -1.0) / (beta**2 - 1.0)
    for k in range(1, N + 1):
        if k - 1 <= K:
            M[k, k - 1] += 1.0 / (2 * k)
        if k + 1 <= K:
            M[k, k + 1] -= 1.0 / (2 * k)
    return M


def integ_mult_matrix(a: np.ndarray, N: int, N_in: int | None = None) -> np.ndarray:
    """Matrix of ``b -> truncate(S(a * b), N)`` for ``b`` of order ``N_in`` (default ``N``)."""
    N_in = N if N_in is None else N_in
    a = np.asarray(a)
    K = order(a) + N_in
    return integ_matrix(K, N) @ mult_matrix(a, N_in)


def eval_matrix(N: int) -> np.ndarray:
    """Matrix of ``E`` on sequences of order ``N``."""
    M = np.zeros((N + 1, N + 1))
    M[0, 0] = 1.0
    M[0, 1:] = 2.0
    return M


def chebyshev_points(n: int) -> np.ndarray:
    """Chebyshev-Gauss points ``cos((2k+1) pi / 2n)`` in increasing order."""
    return np.sort(np.cos((2 * np.arange(n) + 1) * np.pi / (2 * n)))


def from_values(values: np.ndarray) -> np.ndarray:
    """Interpolate samples taken at ``chebyshev_points(len)`` (last axis).

    Returns coefficients in the ``a0 + 2 sum`` convention with order
    ``len - 1``.
    """
    values = np.asarray(values)
    n = values.shape[-1]
    t = chebyshev_points(n)
    theta = np.arccos(t)
    k = np.arange(n)
    T = np.cos(np.outer(theta, k))  # (n points, n coeffs)
    c = values @ T / n  # discrete orthogonality on Gauss points
    c[..., 1:] *= 2
    a = c / 2
    a[..., 0] = c[..., 0]
    return a


def from_function(fun, N: int, samples: int | None = None) -> np.ndarray:
    """Chebyshev coefficients (order ``N``) of a vectorised function on ``[-1, 1]``."""
    n = samples or 2 * (N + 1)
    vals = np.asarray(fun(chebyshev_points(n)))
    return pad(from_values(vals), N)
