"""Two-level Taylor-Chebyshev series.

A ``TaylorChebSeq`` is an array of shape ``(..., M, N + 1)``: axis ``-2``
runs over Taylor multi-indices in graded lexicographic order (see
``MultiIndexSet``), axis ``-1`` holds Chebyshev coefficients in the
``a0 + 2 sum`` convention. The represented function is

    p(t, sigma) = sum_alpha p_alpha(t) * sigma**alpha.

With one unstable direction the multi-index set is just ``0..N'`` and the
functions below take a fast path.
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy.signal import convolve2d

from . import chebseq as cs

__all__ = [
    "MultiIndexSet",
    "multi_indices",
    "conv2",
    "taylor_truncate",
    "eval_taylor",
    "scale_L",
    "real_slice",
    "lambda_powers",
]


class MultiIndexSet:
    """All ``alpha`` in ``N^{n_u}`` with ``|alpha| <= order``, graded-lex ordered."""

    def __init__(self, n_u: int, order: int):
        if n_u < 1 or order < 0:
            raise ValueError("need n_u >= 1 and order >= 0")
        self.n_u = n_u
        self.order = order
        idx: list[tuple[int, ...]] = []
        for deg in range(order + 1):
            # lexicographically decreasing in the first coordinate
            for a in sorted(_compositions(deg, n_u), reverse=True):
                idx.append(a)
        self.indices = idx
        self.array = np.array(idx, dtype=int).reshape(len(idx), n_u)
        self.degree = self.array.sum(axis=1)
        self.position = {a: i for i, a in enumerate(idx)}

    @property
    def size(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndexSet) and (self.n_u, self.order) == (other.n_u, other.order)

    def __hash__(self) -> int:
        return hash((self.n_u, self.order))

    def unit(self, l: int) -> int:
        """Position of the Kronecker index ``e_l``."""
        e = [0] * self.n_u
        e[l] = 1
        return self.position[tuple(e)]

    def of_degree(self, deg: int) -> np.ndarray:
        return np.flatnonzero(self.degree == deg)

    def monomials(self, sigma: np.ndarray) -> np.ndarray:
        """``sigma**alpha`` for every stored ``alpha``."""
        sigma = np.asarray(sigma, dtype=complex).reshape(self.n_u)
        return np.prod(sigma[None, :] ** self.array, axis=1)

    def product_table(self) -> list[tuple[int, int, int]]:
        """Triples ``(i, j, k)`` with ``alpha_i + alpha_j = alpha_k`` inside the set."""
        return _product_table(self.n_u, self.order)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=32)
def _product_table(n_u: int, order: int) -> list[tuple[int, int, int]]:
    mis = multi_indices(n_u, order)
    out = []
    for i, a in enumerate(mis.indices):
        for j, b in enumerate(mis.indices):
            c = tuple(x + y for x, y in zip(a, b))
            k = mis.position.get(c)
            if k is not None:
                out.append((i, j, k))
    return out


@lru_cache(maxsize=32)
def multi_indices(n_u: int, order: int) -> MultiIndexSet:
    return MultiIndexSet(n_u, order)


def _infer(a: np.ndarray, mis: MultiIndexSet | None) -> MultiIndexSet:
    if mis is None:
        return multi_indices(1, a.shape[-2] - 1)
    if mis.size != a.shape[-2]:
        raise ValueError(f"array has {a.shape[-2]} Taylor slices, index set has {mis.size}")
    return mis


def conv2(
    a: np.ndarray,
    b: np.ndarray,
    mis: MultiIndexSet | None = None,
    N: int | None = None,
) -> np.ndarray:
    """Cauchy-in-sigma, Chebyshev-in-t product of two series on the same index set.

    The Taylor order of the result is the index set's order (higher total
    degrees are dropped). The Chebyshev order is exact unless ``N`` is given.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-2] != b.shape[-2]:
        raise ValueError("Taylor dimension mismatch")
    mis = _infer(a, mis)
    Na, Nb = cs.order(a), cs.order(b)
    lead = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    A = np.broadcast_to(a, lead + a.shape[-2:]).reshape((-1,) + a.shape[-2:])
    B = np.broadcast_to(b, lead + b.shape[-2:]).reshape((-1,) + b.shape[-2:])
    M = mis.size
    out = np.zeros((A.shape[0], M, Na + Nb + 1), dtype=np.result_type(a, b, float))
    if mis.n_u == 1:
        for r in range(A.shape[0]):
            full = convolve2d(
                np.concatenate([A[r][:, :0:-1], A[r]], axis=1),
                np.concatenate([B[r][:, :0:-1], B[r]], axis=1),
            )
            out[r] = full[:M, Na + Nb :]
    else:
        for i, j, k in mis.product_table():
            out[:, k] += cs.conv(A[:, i], B[:, j])
    out = out.reshape(lead + (M, Na + Nb + 1))
    return out if N is None else cs.pad(out, N)


def taylor_truncate(a: np.ndarray, order: int, mis: MultiIndexSet | None = None) -> np.ndarray:
    """Zero every slice of total degree above ``order``."""
    a = np.asarray(a)
    mis = _infer(a, mis)
    out = np.array(a, copy=True)
    out[..., mis.degree > order, :] = 0
    return out


def eval_taylor(a: np.ndarray, sigma, mis: MultiIndexSet | None = None) -> np.ndarray:
    """Sum ``a_alpha * sigma**alpha`` over stored ``alpha``; returns a Chebyshev array."""
    a = np.asarray(a)
    mis = _infer(a, mis)
    sigma = np.atleast_1d(np.asarray(sigma, dtype=complex))
    if np.any(np.abs(sigma) > 1 + 1e-12):
        warnings.warn("evaluating a Taylor-Chebyshev series outside the unit polydisk", stacklevel=2)
    mono = mis.monomials(sigma)
    return np.einsum("...mk,m->...k", a, mono)


def lambda_powers(lam, mis: MultiIndexSet) -> np.ndarray:
    """``lambda**alpha`` for every stored ``alpha``."""
    return mis.monomials(np.atleast_1d(np.asarray(lam, dtype=complex)))


def scale_L(lam, a: np.ndarray, mis: MultiIndexSet | None = None) -> np.ndarray:
    """Multiply slice ``alpha`` by ``lambda**alpha``."""
    a = np.asarray(a)
    mis = _infer(a, mis)
    return a * lambda_powers(lam, mis)[:, None]


def real_slice(p: np.ndarray, j: int, sigma: float, m: int, mis: MultiIndexSet | None = None) -> np.ndarray:
    """Evaluate segment ``j`` (1-based) at ``exp(i (j-1) pi / m) * sigma``.

    ``p`` has shape ``(m, n, M, N + 1)``. For a negative multiplier with the
    root ``|mu|^(1/m) exp(i pi / m)`` these values are real up to rounding.
    """
    phase = np.exp(1j * (j - 1) * np.pi / m)
    return eval_taylor(np.asarray(p)[j - 1], phase * sigma, mis)
