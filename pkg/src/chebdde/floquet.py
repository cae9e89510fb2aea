"""Floquet multipliers of an m*tau-periodic orbit from truncated monodromy matrices.

``Hhat_j`` is the derivative of one step at segment ``j`` (it maps a
perturbation of ``c_j`` to one of ``c_{j+1}``). Going once around the orbit
starting from segment ``j`` gives ``H_j``. Its spectrum does not depend on
``j``; the eigenvectors do, and are transported with ``Hhat_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import chebseq as cs
from .linsolve import LU, eig
from .models import CHEB, PolyDDEModel
from .periodic import SegmentedOrbit

__all__ = [
    "FloquetData",
    "step_blocks",
    "build_Hhat",
    "build_H",
    "classify_spectrum",
    "choose_root",
    "transport_eigenvectors",
    "floquet_analysis",
]


@dataclass
class FloquetData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, eigenvectors of H_{base_index}
    counts: tuple[int, int, int]
    classes: np.ndarray  # 'u', 'c' or 's' per eigenvalue
    eps_c: float
    base_index: int = 1
    mu: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    vectors: np.ndarray | None = None  # (n_u, m, n, N + 1)

    @property
    def n_u(self) -> int:
        return self.counts[0]

    def stable_indices(self) -> np.ndarray:
        return np.flatnonzero(self.classes == "s")


def step_blocks(j: int, orbit: SegmentedOrbit, model: PolyDDEModel, N: int | None = None, tau: float | None = None):
    """``(A, B)`` with ``A = I - pi S[(tau/2) D1 f]`` and ``B = E + pi S[(tau/2) D2 f]``,
    both evaluated at ``(c_{j+1}, c_j)`` (1-based, cyclic)."""
    N = orbit.N if N is None else N
    tau = orbit.tau if tau is None else tau
    n = model.n
    B_ = N + 1
    cur = cs.pad(orbit.segment(j + 1), N)
    prev = cs.pad(orbit.segment(j), N)
    dt = np.result_type(cur, prev, tau, float)
    A = np.eye(n * B_, dtype=dt)
    B = np.kron(np.eye(n), cs.eval_matrix(N)).astype(dt)
    D2 = model.jac2(list(cur), list(prev), CHEB)
    D1 = model.jac1(list(cur), list(prev), CHEB) if model.has_D1 else None
    for a in range(n):
        for b in range(n):
            blk = (slice(a * B_, (a + 1) * B_), slice(b * B_, (b + 1) * B_))
            if D2[a][b] is not None:
                B[blk] += cs.integ_mult_matrix(0.5 * tau * np.asarray(D2[a][b]), N)
            if D1 is not None and D1[a][b] is not None:
                A[blk] -= cs.integ_mult_matrix(0.5 * tau * np.asarray(D1[a][b]), N)
    return A, B


def build_Hhat(j: int, orbit: SegmentedOrbit, model: PolyDDEModel, N: int | None = None) -> np.ndarray:
    """Derivative of the step from segment ``j`` to ``j + 1``."""
    A, B = step_blocks(j, orbit, model, N)
    if not model.has_D1:
        return B
    return LU(A).solve(B)


def build_H(j: int, orbit: SegmentedOrbit, model: PolyDDEModel, N: int | None = None) -> np.ndarray:
    """Monodromy matrix based at segment ``j``: ``Hhat_{j-1} ... Hhat_1 Hhat_m ... Hhat_j``."""
    m = orbit.m
    H = None
    for i in range(m):
        Hh = build_Hhat((j - 1 + i) % m + 1, orbit, model, N)
        H = Hh if H is None else Hh @ H
    return H


def classify_spectrum(H: np.ndarray, eps_c: float = 1e-6) -> FloquetData:
    w, V = eig(H)
    r = np.abs(w)
    classes = np.where(r > 1 + eps_c, "u", np.where(r < 1 - eps_c, "s", "c"))
    counts = (int((classes == "u").sum()), int((classes == "c").sum()), int((classes == "s").sum()))
    return FloquetData(w, V, counts, classes, eps_c)


def choose_root(mu: complex, m: int) -> complex:
    """The m-th root used for the segment maps.

    Negative real ``mu`` gives ``|mu|^(1/m) exp(i pi / m)``, positive real
    ``mu`` the positive real root, anything else the principal root.
    """
    mu = complex(mu)
    if abs(mu) <= 1:
        raise ValueError("multiplier must lie outside the unit circle")
    if mu.imag == 0:
        r = abs(mu) ** (1.0 / m)
        return complex(r) if mu.real > 0 else r * np.exp(1j * np.pi / m)
    return mu ** (1.0 / m)


def transport_eigenvectors(
    j0: int,
    v: np.ndarray,
    lam: complex,
    orbit: SegmentedOrbit,
    model: PolyDDEModel,
    N: int | None = None,
) -> np.ndarray:
    """``v_{j0} = v`` and ``v_{j+1} = Hhat_j v_j / lam`` around the orbit.

    Returns shape ``(m, n * (N + 1))`` indexed by segment (0-based).
    """
    m = orbit.m
    out = np.zeros((m, v.size), dtype=complex)
    cur = np.asarray(v, dtype=complex)
    j = j0
    for _ in range(m):
        out[(j - 1) % m] = cur
        cur = build_Hhat(j, orbit, model, N) @ cur / lam
        j = j % m + 1
    return out


def _real_rotation(v: np.ndarray) -> np.ndarray:
    """Rotate a complex vector so that its largest entry is real positive."""
    k = int(np.argmax(np.abs(v)))
    return v * (np.abs(v[k]) / v[k])


def floquet_analysis(
    orbit: SegmentedOrbit,
    model: PolyDDEModel,
    eps_c: float = 1e-6,
    base_index: int = 1,
    N: int | None = None,
) -> FloquetData:
    """Spectrum of ``H_base``, the unstable roots and their transported eigenvectors."""
    N = orbit.N if N is None else N
    H = build_H(base_index, orbit, model, N)
    fd = classify_spectrum(H, eps_c)
    fd.base_index = base_index
    m = orbit.m
    nu = fd.n_u
    fd.mu = fd.eigenvalues[:nu].copy()
    # snap numerically real multipliers onto the real axis
    for i, mu in enumerate(fd.mu):
        if abs(mu.imag) <= 1e-10 * abs(mu):
            fd.mu[i] = mu.real
    fd.lam = np.array([choose_root(mu, m) for mu in fd.mu], dtype=complex)
    vecs = np.zeros((nu, m, model.n, N + 1), dtype=complex)
    for i in range(nu):
        v = fd.eigenvectors[:, i]
        if abs(fd.mu[i].imag) == 0:
            v = _real_rotation(v).real.astype(complex)
        chain = transport_eigenvectors(base_index, v, fd.lam[i], orbit, model, N)
        vecs[i] = chain.reshape(m, model.n, N + 1)
    fd.vectors = vecs
    return fd
