"""Transverse homoclinic orbits as zeros of one square system.

The unknowns are the delay, the unfolding parameters (embedded models),
the unstable eigenvalues, the whole manifold parameterization ``p``, the
departure parameter ``sigma``, the phase values ``delta`` of the orbit
anchor, the stable coordinates ``h`` of the landing point and the ``k``
connecting segments ``y``. The equations are

* phase rows ``E(p_{m,0})(1) - delta`` (all ``n`` components),
* scaling rows fixing the first component of ``p_{m,e_l}`` at ``t = 1``,
* conjugacy defects for every Taylor order and segment,
* the departure ``P_m(sigma) - y_1``, the chained steps, and the landing
  ``E(y_k) + S(tau/2 f(Q(h), y_k)) - Q(h)`` on the first-order stable graph
  ``Q(h) = c_{j*} + V h`` of the return orbit.

Everything is complex. Two linear solvers are provided: a dense LU for
systems that fit in memory and a bordered block elimination that walks the
Taylor orders and then the connecting chain, leaving a core the size of one
segment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, onenormest

from . import chebseq as cs
from . import taylorcheb as tc
from .floquet import build_H, classify_spectrum
from .linsolve import LU, NewtonError, NewtonReport, SingularMatrixError, newton
from .manifold import ManifoldParam, ReturnReport
from .models import CHEB, PolyDDEModel, stack, taylor_algebra
from .periodic import SegmentedOrbit, newton_periodic, orbit_from_function, trajectory_function
from .stepper import step

log = logging.getLogger(__name__)

__all__ = [
    "StableGraph",
    "build_stable_graph",
    "HomoclinicState",
    "HomoclinicProblem",
    "HomoclinicSolution",
    "residual_F_co",
    "residual_F_Wu",
    "residual_F_Wu_elem",
    "return_orbit",
    "seed_homoclinic",
    "solve_homoclinic",
    "transversality_report",
]

DENSE_LIMIT = 8000  # unknowns; above this the structured solver is used


# -- stable graph -----------------------------------------------------------------


@dataclass
class StableGraph:
    """First-order graph ``h -> base + V h`` of the local stable manifold at one piece."""

    base: np.ndarray  # (n, N + 1)
    V: np.ndarray  # (n (N + 1), count)
    j_star: int
    eigenvalues: np.ndarray  # of the retained columns

    @property
    def count(self) -> int:
        return self.V.shape[1]

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def N(self) -> int:
        return self.base.shape[1] - 1

    def __call__(self, h) -> np.ndarray:
        h = np.asarray(h)
        if self.count == 0:
            return self.base.astype(complex)
        return self.base + (self.V @ h).reshape(self.base.shape)

    def eigen_residual(self, H: np.ndarray) -> float:
        """Largest relative residual ``|H v - mu v| / (|H| |v|)`` over the columns."""
        if self.count == 0:
            return 0.0
        R = H @ self.V - self.V * self.eigenvalues[None, :]
        scale = np.abs(H).sum(axis=0).max() * np.abs(self.V).sum(axis=0)
        return float((np.abs(R).sum(axis=0) / scale).max())


def build_stable_graph(
    orbit: SegmentedOrbit,
    model: PolyDDEModel,
    j_star: int,
    count: int | None = None,
    eps_c: float = 1e-6,
    H: np.ndarray | None = None,
) -> StableGraph:
    """Retain the ``count`` stable eigenvectors of ``H_{j*}`` with largest modulus.

    ``count=None`` keeps all of them. Columns are scaled to unit l1 norm.

    The ``n`` multipliers nearest to 1 (time shift plus one per embedding
    coordinate) are set aside before anything is called stable. At 1 they
    can form a Jordan block whose computed eigenvalues split by the square
    root of the rounding error, easily beyond ``eps_c``; letting one of
    them into the graph makes the connection system singular.
    """
    if H is None:
        H = build_H(j_star, orbit, model)
    fd = classify_spectrum(H, eps_c)
    mu = fd.eigenvalues
    center = np.argsort(np.abs(mu - 1.0), kind="stable")[: orbit.n]
    spread = float(np.abs(mu[center] - 1.0).max())
    if spread > eps_c:
        log.info("center multipliers of H_%d spread %.1e from 1 (eps_c = %.0e)", j_star, spread, eps_c)
    rest = np.setdiff1d(np.arange(mu.size), center)
    stable = rest[np.abs(mu[rest]) < 1.0]
    stable = stable[np.argsort(-np.abs(mu[stable]), kind="stable")]
    if count is None:
        count = stable.size
    if count > stable.size:
        raise ValueError(f"requested {count} stable directions but only {stable.size} exist")
    idx = stable[:count]
    V = fd.eigenvectors[:, idx].astype(complex)
    n, B = orbit.n, orbit.N + 1
    for c in range(V.shape[1]):
        V[:, c] /= cs.norm_l1nu(V[:, c].reshape(n, B))
    return StableGraph(orbit.segment(j_star).astype(complex), V, j_star, mu[idx].copy())


# -- unknowns and layout ------------------------------------------------------------


@dataclass
class HomoclinicState:
    tau: complex
    eta: np.ndarray  # (d,)
    lam: np.ndarray  # (n_u,)
    p: np.ndarray  # (m, n, M, N + 1)
    sigma: np.ndarray  # (n_u,)
    delta: np.ndarray  # (n,)
    h: np.ndarray  # (count,)
    y: np.ndarray  # (k, n, N + 1)

    def copy(self) -> "HomoclinicState":
        return HomoclinicState(
            self.tau, self.eta.copy(), self.lam.copy(), self.p.copy(), self.sigma.copy(), self.delta.copy(), self.h.copy(), self.y.copy()
        )


class _Layout:
    """Offsets of named unknown and equation units, grouped for block elimination.

    Column units: ``tau``, ``eta``, ``(lam, l)``, ``(p, a, j)``, ``sigma``,
    ``delta``, ``h``, ``(y, i)``. Row units: ``phase``, ``(conj, a, j)``,
    ``(scale, l)``, ``dep``, ``(chain, i)``, ``land``. Groups are ordered so
    that the Jacobian restricted to non-border units is block lower
    triangular; the border is ``land`` against ``sigma, delta, h``.
    """

    def __init__(self, m: int, n: int, N: int, mis: tc.MultiIndexSet, k: int, count: int, d: int):
        self.m, self.n, self.N, self.mis, self.k, self.count, self.d = m, n, N, mis, k, count, d
        B = n * (N + 1)
        self.seg = B
        groups: list[tuple[list, list]] = []
        g0_cols = [("tau",)] + ([("eta",)] if d else []) + [("p", 0, j) for j in range(m)]
        groups.append(([("phase",)] + [("conj", 0, j) for j in range(m)], g0_cols))
        for l in range(mis.n_u):
            a = mis.unit(l)
            groups.append(([("scale", l)] + [("conj", a, j) for j in range(m)], [("lam", l)] + [("p", a, j) for j in range(m)]))
        for a in range(mis.size):
            if mis.degree[a] >= 2:
                groups.append(([("conj", a, j) for j in range(m)], [("p", a, j) for j in range(m)]))
        groups.append(([("dep",)], [("y", 0)]))
        for i in range(1, k):
            groups.append(([("chain", i)], [("y", i)]))
        self.groups = groups
        self.border = ([("land",)], [("sigma",), ("delta",), ("h",)])
        sizes = {
            "tau": 1,
            "eta": d,
            "lam": 1,
            "p": B,
            "sigma": mis.n_u,
            "delta": n,
            "h": count,
            "y": B,
            "phase": n,
            "conj": B,
            "scale": 1,
            "dep": B,
            "chain": B,
            "land": B,
        }
        self.cols: dict = {}
        self.rows: dict = {}
        self.col_group: dict = {}
        self.row_group: dict = {}
        co = ro = 0
        for gi, (rows, cols) in enumerate(groups + [self.border]):
            for u in rows:
                self.rows[u] = (ro, sizes[u[0]])
                self.row_group[u] = gi
                ro += sizes[u[0]]
            for u in cols:
                self.cols[u] = (co, sizes[u[0]])
                self.col_group[u] = gi
                co += sizes[u[0]]
        self.n_rows, self.n_cols = ro, co
        self.n_groups = len(groups)
        self.group_rows = [self._span(self.rows, g[0]) for g in groups + [self.border]]
        self.group_cols = [self._span(self.cols, g[1]) for g in groups + [self.border]]

    @staticmethod
    def _span(table, units):
        lo = min(table[u][0] for u in units)
        hi = max(table[u][0] + table[u][1] for u in units)
        return lo, hi

    @property
    def square(self) -> bool:
        return self.n_rows == self.n_cols and all(
            (r[1] - r[0]) == (c[1] - c[0]) for r, c in zip(self.group_rows, self.group_cols)
        )

    def pack(self, s: HomoclinicState) -> np.ndarray:
        x = np.zeros(self.n_cols, dtype=complex)

        def put(u, v):
            o, sz = self.cols[u]
            x[o : o + sz] = np.asarray(v).reshape(-1)

        put(("tau",), s.tau)
        if self.d:
            put(("eta",), s.eta)
        for l in range(self.mis.n_u):
            put(("lam", l), s.lam[l])
        for a in range(self.mis.size):
            for j in range(self.m):
                put(("p", a, j), s.p[j, :, a, :])
        put(("sigma",), s.sigma)
        put(("delta",), s.delta)
        put(("h",), s.h)
        for i in range(self.k):
            put(("y", i), s.y[i])
        return x

    def unpack(self, x: np.ndarray) -> HomoclinicState:
        m, n, N, mis = self.m, self.n, self.N, self.mis

        def get(u):
            o, sz = self.cols[u]
            return x[o : o + sz]

        p = np.zeros((m, n, mis.size, N + 1), dtype=complex)
        for a in range(mis.size):
            for j in range(m):
                p[j, :, a, :] = get(("p", a, j)).reshape(n, N + 1)
        y = np.stack([get(("y", i)).reshape(n, N + 1) for i in range(self.k)])
        return HomoclinicState(
            complex(get(("tau",))[0]),
            get(("eta",)).copy() if self.d else np.zeros(0, complex),
            np.array([get(("lam", l))[0] for l in range(mis.n_u)]),
            p,
            get(("sigma",)).copy(),
            get(("delta",)).copy(),
            get(("h",)).copy(),
            y,
        )


@dataclass
class HomoclinicProblem:
    model: PolyDDEModel
    graph: StableGraph
    gamma: np.ndarray  # complex scaling targets, one per unstable direction
    m: int
    N: int
    mis: tc.MultiIndexSet
    k: int
    tau_return: float
    layout: _Layout = field(init=False)

    def __post_init__(self):
        n = self.model.n
        need = n * (self.N + 1) - self.mis.n_u - n
        if self.graph.count != need:
            raise ValueError(
                f"the system is square only with {need} stable directions; the graph has {self.graph.count}"
            )
        self.layout = _Layout(self.m, n, self.N, self.mis, self.k, self.graph.count, self.model.d)
        if not self.layout.square:
            raise AssertionError("homoclinic system is not square")

    @property
    def size(self) -> int:
        return self.layout.n_cols


# -- residual blocks ------------------------------------------------------------------


def _E_end(a: np.ndarray) -> np.ndarray:
    """Value at ``t = 1`` along the last axis."""
    return a[..., 0] + 2 * a[..., 1:].sum(axis=-1)


def _step_value(cur, prev, tau, model, N, extra=None):
    """``E(prev) + S(tau/2 f(cur, prev) [+ extra])`` truncated to order ``N``."""
    f = 0.5 * tau * stack(model.rhs(list(cur), list(prev), CHEB))
    if extra is not None:
        f = cs.add(f, extra)
    return cs.pad(cs.eval_op_E(prev), N) + cs.pad(cs.integ_op_S(f), N)


def _taylor_fields(s: HomoclinicState, model: PolyDDEModel, mis: tc.MultiIndexSet, jac: bool):
    """Per segment ``j``: ``f``, ``D1 f`` and ``D2 f`` at ``(L(lam, p_j), p_{j-1})`` as Taylor-Chebyshev series."""
    alg = taylor_algebra(mis)
    lp = tc.lambda_powers(s.lam, mis)
    out = []
    m = s.p.shape[0]
    for j in range(m):
        cur = s.p[j] * lp[:, None]
        prev = s.p[j - 1]
        f = stack(model.rhs(list(cur), list(prev), alg))
        D1 = model.jac1(list(cur), list(prev), alg) if (jac and model.has_D1) else None
        D2 = model.jac2(list(cur), list(prev), alg) if jac else None
        out.append((f, D1, D2))
    return out, lp


def residual_F_Wu(s: HomoclinicState, model: PolyDDEModel, gamma, mis: tc.MultiIndexSet, N: int, fields=None) -> dict:
    """Phase, scaling and conjugacy blocks (the unfolding ``eta`` enters at order 0 only)."""
    fields, lp = fields if fields is not None else _taylor_fields(s, model, mis, False)
    m, n = s.p.shape[:2]
    out: dict = {}
    out[("phase",)] = _E_end(s.p[m - 1, :, 0, :]) - s.delta
    for l in range(mis.n_u):
        out[("scale", l)] = np.atleast_1d(_E_end(s.p[m - 1, 0, mis.unit(l), :]) - gamma[l])
    iota = None
    if model.d:
        iota = np.zeros((n, 1), dtype=complex)
        iota[1:, 0] = s.eta
    for j in range(m):
        f = fields[j][0]
        prev = s.p[j - 1]
        g = 0.5 * s.tau * f
        if iota is not None:
            g = g.copy()
            g[:, 0, :1] += iota
        conj = cs.pad(cs.eval_op_E(prev), N) + cs.pad(cs.integ_op_S(g), N) - s.p[j] * lp[None, :, None]
        for a in range(mis.size):
            out[("conj", a, j)] = conj[:, a, :]
    return out


def residual_F_Wu_elem(s: HomoclinicState, model: PolyDDEModel, gamma, mis: tc.MultiIndexSet, N: int) -> dict:
    if model.d == 0:
        raise ValueError("the unfolded problem needs a model with embedding coordinates")
    return residual_F_Wu(s, model, gamma, mis, N)


def residual_F_co(s: HomoclinicState, model: PolyDDEModel, graph: StableGraph, mis: tc.MultiIndexSet, N: int) -> dict:
    """Departure, chained steps and landing blocks."""
    m = s.p.shape[0]
    out: dict = {}
    mono = mis.monomials(s.sigma)
    out[("dep",)] = np.einsum("nak,a->nk", s.p[m - 1], mono) - s.y[0]
    k = s.y.shape[0]
    for i in range(1, k):
        out[("chain", i)] = _step_value(s.y[i], s.y[i - 1], s.tau, model, N) - s.y[i]
    Q = graph(s.h)
    out[("land",)] = _step_value(Q, s.y[k - 1], s.tau, model, N) - Q
    return out


def _residual_vector(prob: HomoclinicProblem, s: HomoclinicState) -> np.ndarray:
    blocks = residual_F_Wu(s, prob.model, prob.gamma, prob.mis, prob.N)
    blocks.update(residual_F_co(s, prob.model, prob.graph, prob.mis, prob.N))
    r = np.zeros(prob.layout.n_rows, dtype=complex)
    for u, (o, sz) in prob.layout.rows.items():
        r[o : o + sz] = np.asarray(blocks[u]).reshape(-1)
    return r


# -- Jacobian -----------------------------------------------------------------------


def _lin_matrix(D, tau, N, n, lag=None) -> np.ndarray | None:
    """``sum_ab S M[(tau/2) D_ab]`` as an ``n (N+1)`` square matrix (``None`` if all zero)."""
    if D is None:
        return None
    B = N + 1
    out = None
    for a in range(n):
        for b in range(n):
            e = D[a][b]
            if e is None:
                continue
            e = np.asarray(e)
            if lag is not None:
                e = e[lag]
            if not np.any(e):
                continue
            if out is None:
                out = np.zeros((n * B, n * B), dtype=complex)
            out[a * B : (a + 1) * B, b * B : (b + 1) * B] = cs.integ_mult_matrix(0.5 * tau * e, N)
    return out


class _BlockJacobian:
    """Sparse collection of dense blocks ``coef * M`` between layout units."""

    def __init__(self, layout: _Layout):
        self.layout = layout
        self.entries: dict = {}

    def add(self, ru, cu, M, coef=1.0):
        M = np.asarray(M)
        ro, rs = self.layout.rows[ru]
        co, csz = self.layout.cols[cu]
        if M.ndim == 1:
            M = M.reshape(rs, csz)
        if M.shape != (rs, csz):
            raise ValueError(f"block {ru} x {cu} has shape {M.shape}, expected {(rs, csz)}")
        self.entries.setdefault((ru, cu), []).append((coef, M))

    def blocks(self):
        for (ru, cu), lst in self.entries.items():
            for coef, M in lst:
                yield ru, cu, coef, M

    def to_dense(self) -> np.ndarray:
        L = self.layout
        J = np.zeros((L.n_rows, L.n_cols), dtype=complex)
        for ru, cu, coef, M in self.blocks():
            ro, rs = L.rows[ru]
            co, csz = L.cols[cu]
            J[ro : ro + rs, co : co + csz] += coef * M
        return J

    def matvec(self, x: np.ndarray) -> np.ndarray:
        L = self.layout
        out = np.zeros((L.n_rows,) + x.shape[1:], dtype=complex)
        for ru, cu, coef, M in self.blocks():
            ro, rs = L.rows[ru]
            co, csz = L.cols[cu]
            out[ro : ro + rs] += coef * (M @ x[co : co + csz])
        return out

    def norm1(self) -> float:
        L = self.layout
        colsum = np.zeros(L.n_cols)
        # blocks sharing a unit pair may cancel; merge them first
        for (ru, cu), lst in self.entries.items():
            co, csz = L.cols[cu]
            tot = sum(coef * M for coef, M in lst)
            colsum[co : co + csz] += np.abs(tot).sum(axis=0)
        return float(colsum.max())


def _assemble(prob: HomoclinicProblem, s: HomoclinicState) -> _BlockJacobian:
    model, mis, N, m, k = prob.model, prob.mis, prob.N, prob.m, prob.k
    n = model.n
    B = N + 1
    nB = n * B
    L = prob.layout
    Jb = _BlockJacobian(L)
    (fields, lp) = _taylor_fields(s, model, mis, True)
    Eblk = np.kron(np.eye(n), cs.eval_matrix(N)).astype(complex)
    I = np.eye(nB, dtype=complex)
    end_row = np.full(B, 2.0)
    end_row[0] = 1.0

    # phase and scaling rows
    Ph = np.zeros((n, nB))
    for i in range(n):
        Ph[i, i * B : (i + 1) * B] = end_row
    Jb.add(("phase",), ("p", 0, m - 1), Ph)
    Jb.add(("phase",), ("delta",), -np.eye(n))
    for l in range(mis.n_u):
        row = np.zeros((1, nB))
        row[0, :B] = end_row
        Jb.add(("scale", l), ("p", mis.unit(l), m - 1), row)

    # lag tables: T1[j][lag], T2[j][lag]
    lag_of = {}
    for a, alpha in enumerate(mis.indices):
        for b, beta in enumerate(mis.indices):
            diff = tuple(x - y for x, y in zip(alpha, beta))
            if min(diff) >= 0:
                lag_of[(a, b)] = mis.position[diff]
    S_unit = cs.pad(cs.integ_op_S(np.array([1.0])), N)
    for j in range(m):
        f, D1, D2 = fields[j]
        jp = (j - 1) % m
        T1 = [_lin_matrix(D1, s.tau, N, n, lag) for lag in range(mis.size)] if D1 is not None else [None] * mis.size
        T2 = [_lin_matrix(D2, s.tau, N, n, lag) for lag in range(mis.size)]
        dtau = cs.pad(cs.integ_op_S(0.5 * f), N)  # (n, M, N+1)
        for a in range(mis.size):
            ru = ("conj", a, j)
            Jb.add(ru, ("tau",), dtau[:, a, :].reshape(nB, 1))
            if a == 0 and model.d:
                col = np.zeros((nB, model.d))
                for i in range(model.d):
                    col[(1 + i) * B : (2 + i) * B, i] = S_unit
                Jb.add(ru, ("eta",), col)
            Jb.add(ru, ("p", a, jp), Eblk)
            Jb.add(ru, ("p", a, j), I, -lp[a])
            for b in range(mis.size):
                lag = lag_of.get((a, b))
                if lag is None:
                    continue
                if T2[lag] is not None:
                    Jb.add(ru, ("p", b, jp), T2[lag])
                if T1[lag] is not None:
                    Jb.add(ru, ("p", b, j), T1[lag], lp[b])
            # eigenvalue columns
            alpha = mis.indices[a]
            for l in range(mis.n_u):
                col = np.zeros(nB, dtype=complex)
                if alpha[l] >= 1:
                    col -= alpha[l] * _pow_minus(s.lam, alpha, l) * s.p[j, :, a, :].reshape(-1)
                for b in range(mis.size):
                    lag = lag_of.get((a, b))
                    beta = mis.indices[b]
                    if lag is None or beta[l] == 0 or T1[lag] is None:
                        continue
                    col += beta[l] * _pow_minus(s.lam, beta, l) * (T1[lag] @ s.p[j, :, b, :].reshape(-1))
                if np.any(col):
                    Jb.add(ru, ("lam", l), col.reshape(nB, 1))

    # departure
    mono = mis.monomials(s.sigma)
    for a in range(mis.size):
        Jb.add(("dep",), ("p", a, m - 1), I, mono[a])
    dsig = np.zeros((nB, mis.n_u), dtype=complex)
    for l in range(mis.n_u):
        for a, alpha in enumerate(mis.indices):
            if alpha[l] >= 1:
                dsig[:, l] += alpha[l] * _pow_minus(s.sigma, alpha, l) * s.p[m - 1, :, a, :].reshape(-1)
    Jb.add(("dep",), ("sigma",), dsig)
    Jb.add(("dep",), ("y", 0), -I)

    # chain
    for i in range(1, k):
        cur, prev = s.y[i], s.y[i - 1]
        ru = ("chain", i)
        f = stack(model.rhs(list(cur), list(prev), CHEB))
        Jb.add(ru, ("tau",), cs.pad(cs.integ_op_S(0.5 * f), N).reshape(nB, 1))
        A2 = _lin_matrix(model.jac2(list(cur), list(prev), CHEB), s.tau, N, n)
        Jb.add(ru, ("y", i - 1), Eblk if A2 is None else Eblk + A2)
        A1 = _lin_matrix(model.jac1(list(cur), list(prev), CHEB), s.tau, N, n) if model.has_D1 else None
        Jb.add(ru, ("y", i), -I if A1 is None else A1 - I)

    # landing
    Q = prob.graph(s.h)
    yk = s.y[k - 1]
    f = stack(model.rhs(list(Q), list(yk), CHEB))
    Jb.add(("land",), ("tau",), cs.pad(cs.integ_op_S(0.5 * f), N).reshape(nB, 1))
    A2 = _lin_matrix(model.jac2(list(Q), list(yk), CHEB), s.tau, N, n)
    Jb.add(("land",), ("y", k - 1), Eblk if A2 is None else Eblk + A2)
    A1 = _lin_matrix(model.jac1(list(Q), list(yk), CHEB), s.tau, N, n) if model.has_D1 else None
    if prob.graph.count:
        Jb.add(("land",), ("h",), (-I if A1 is None else A1 - I) @ prob.graph.V)
    return Jb


def _pow_minus(z, alpha, l):
    """``z**(alpha - e_l)``."""
    z = np.asarray(z, dtype=complex)
    e = np.array(alpha) - np.eye(len(alpha), dtype=int)[l]
    return np.prod(z**e)


# -- linear solvers ---------------------------------------------------------------------


class _DenseSolver:
    def __init__(self, Jb: _BlockJacobian):
        self.J = Jb.to_dense()
        self.lu = LU(self.J)

    def solve(self, r):
        return self.lu.solve(r)

    def rcond(self) -> float:
        return self.lu.rcond()


class _BlockSolver:
    """Bordered block elimination.

    The non-border part ``A`` is block lower triangular over the layout
    groups; its diagonal blocks are factorized once. With the border
    ``B`` (its columns), ``C`` (its rows) and ``D``, a solve needs a few
    forward substitutions through ``A`` and one small dense Schur solve.
    """

    def __init__(self, Jb: _BlockJacobian):
        L = Jb.layout
        self.Jb, self.L = Jb, L
        G = L.n_groups
        self.G = G
        r0, r1 = L.group_rows[G]
        c0, c1 = L.group_cols[G]
        self.nA = r0
        self.lower: list[list] = [[] for _ in range(G)]  # per row group: (ro, rs, co, csz, coef, M)
        self.upper_of_col: list[list] = [[] for _ in range(G)]
        diag = [np.zeros((L.group_rows[g][1] - L.group_rows[g][0],) * 2, dtype=complex) for g in range(G)]
        Bm = np.zeros((self.nA, c1 - c0), dtype=complex)
        self.C: list = []  # (co, csz, coef, M) acting on A unknowns, rows = border
        D = np.zeros((r1 - r0, c1 - c0), dtype=complex)
        for ru, cu, coef, M in Jb.blocks():
            gr, gc = L.row_group[ru], L.col_group[cu]
            ro, rs = L.rows[ru]
            co, csz = L.cols[cu]
            if gr == G and gc == G:
                D[ro - r0 : ro - r0 + rs, co - c0 : co - c0 + csz] += coef * M
            elif gr == G:
                self.C.append((co, csz, coef, M))
            elif gc == G:
                Bm[ro : ro + rs, co - c0 : co - c0 + csz] += coef * M
            elif gr == gc:
                g0r = L.group_rows[gr][0]
                g0c = L.group_cols[gc][0]
                diag[gr][ro - g0r : ro - g0r + rs, co - g0c : co - g0c + csz] += coef * M
            elif gc < gr:
                self.lower[gr].append((ro, rs, co, csz, coef, M))
                self.upper_of_col[gc].append((ro, rs, co, csz, coef, M))
            else:
                raise AssertionError(f"block {ru} x {cu} breaks the lower-triangular structure")
        self.lus = []
        for g in range(G):
            try:
                self.lus.append(LU(diag[g]))
            except SingularMatrixError as exc:
                raise SingularMatrixError(f"diagonal block of group {g} is singular") from exc
        self.rcond_diag = min(lu.rcond() for lu in self.lus)
        self.bcols = np.flatnonzero(np.any(Bm != 0, axis=0))
        self.B = Bm[:, self.bcols]
        self.D = D
        Y = self._forward(self.B)
        self.AinvB = Y
        self.schur = D.copy()
        self.schur[:, self.bcols] -= self._apply_C(Y)
        self.schur_lu = LU(self.schur)

    def _forward(self, b: np.ndarray) -> np.ndarray:
        """Solve ``A x = b`` (``b`` has ``nA`` rows, any number of columns)."""
        L = self.L
        x = np.zeros(b.shape, dtype=complex)
        for g in range(self.G):
            r0, r1 = L.group_rows[g]
            c0, c1 = L.group_cols[g]
            rhs = np.array(b[r0:r1], dtype=complex, copy=True)
            for ro, rs, co, csz, coef, M in self.lower[g]:
                rhs[ro - r0 : ro - r0 + rs] -= coef * (M @ x[co : co + csz])
            x[c0:c1] = self.lus[g].solve(rhs)
        return x

    def _backward_H(self, b: np.ndarray) -> np.ndarray:
        """Solve ``A^H x = b``."""
        L = self.L
        x = np.zeros(b.shape, dtype=complex)
        for g in reversed(range(self.G)):
            r0, r1 = L.group_rows[g]
            c0, c1 = L.group_cols[g]
            rhs = np.array(b[c0:c1], dtype=complex, copy=True)
            for ro, rs, co, csz, coef, M in self.upper_of_col[g]:
                rhs[co - c0 : co - c0 + csz] -= np.conj(coef) * (M.conj().T @ x[ro : ro + rs])
            x[r0:r1] = self.lus[g].solve(rhs, trans=2)
        return x

    def _apply_C(self, x: np.ndarray) -> np.ndarray:
        r0, r1 = self.L.group_rows[self.G]
        out = np.zeros((r1 - r0,) + x.shape[1:], dtype=complex)
        for co, csz, coef, M in self.C:
            out += coef * (M @ x[co : co + csz])
        return out

    def _apply_CH(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros((self.nA,) + v.shape[1:], dtype=complex)
        for co, csz, coef, M in self.C:
            out[co : co + csz] += np.conj(coef) * (M.conj().T @ v)
        return out

    def solve(self, r: np.ndarray) -> np.ndarray:
        nA = self.nA
        rA, rL = r[:nA], r[nA:]
        xA0 = self._forward(rA)
        z = self.schur_lu.solve(rL - self._apply_C(xA0))
        xA = xA0 - self.AinvB @ z[self.bcols]
        return np.concatenate([xA, z])

    def solve_H(self, r: np.ndarray) -> np.ndarray:
        nA = self.nA
        a, b = r[:nA], r[nA:]
        u0 = self._backward_H(a)
        v = self.schur_lu.solve(b - self._BH(u0), trans=2)
        u = self._backward_H(a - self._apply_CH(v))
        return np.concatenate([u, v])

    def _BH(self, u: np.ndarray) -> np.ndarray:
        out = np.zeros((self.D.shape[1],) + u.shape[1:], dtype=complex)
        out[self.bcols] = self.B.conj().T @ u
        return out

    def rcond(self) -> float:
        """``1 / (|J|_1 est|J^-1|_1)`` with a block 1-norm estimator."""
        n = self.L.n_cols
        op = LinearOperator(
            (n, n),
            matvec=lambda v: self.solve(np.asarray(v, dtype=complex).reshape(-1)),
            rmatvec=lambda v: self.solve_H(np.asarray(v, dtype=complex).reshape(-1)),
            dtype=complex,
        )
        inv_norm = onenormest(op)
        return float(1.0 / (self.Jb.norm1() * inv_norm))


def _make_solver(Jb: _BlockJacobian, kind: str):
    if kind == "dense":
        return _DenseSolver(Jb)
    if kind == "structured":
        return _BlockSolver(Jb)
    raise ValueError(f"unknown linear solver {kind!r}")


# -- seeding -------------------------------------------------------------------------------


def return_orbit(
    orbit: SegmentedOrbit,
    model: PolyDDEModel,
    theta: float,
    phase: float | None = None,
    reconverge: bool = True,
) -> SegmentedOrbit:
    """The orbit shifted so that its ``m``-th piece ends ``theta`` after the original one.

    The shifted segments are cut from the exact periodic extension and, with
    ``reconverge``, polished by Newton at the new anchor. Newton moves the
    delay by the truncation error of the re-expansion (about 1e-8 for
    Mackey-Glass at N = 45). Without it the delay is kept but the cut is not
    an exact zero of the truncated system.
    """
    m, tau = orbit.m, orbit.tau
    period = m * tau
    segs = [orbit.segment(j) for j in range(1, m + 1)] * 3
    fun = trajectory_function(segs, tau, t0=-period)
    t_end = float(np.mod(theta, period))
    value = float(fun(np.array([t_end]))[0, 0]) if phase is None else phase
    guess = orbit_from_function(fun, t_end, tau, m, orbit.N, model, value)
    guess.eta = orbit.eta.copy()
    if not reconverge:
        return guess
    guess.eta = np.zeros(model.d)
    out, _ = newton_periodic(guess, model, value)
    return out


def seed_homoclinic(
    P: ManifoldParam,
    model: PolyDDEModel,
    growth: ReturnReport,
    k: int | None = None,
    j_star: int | None = None,
    graph: StableGraph | None = None,
    ret: SegmentedOrbit | None = None,
    count: int | None = None,
) -> tuple[HomoclinicProblem, HomoclinicState]:
    """Initial data for the combined solve.

    ``k`` and ``j_star`` default to the growth report. A different ``k``
    follows the same trajectory further (or less far), so the landing piece
    moves along with it unless ``j_star`` is given too. The connecting
    segments are generated forward from the departure point and the stable
    coordinates are a least-squares fit of the landing point.
    """
    k = growth.k if k is None else k
    if k < 1:
        raise ValueError("the connection needs at least one segment")
    orbit = P.orbit
    natural = (growth.j_star + k - growth.k - 1) % orbit.m + 1
    j_star = natural if j_star is None else j_star
    if ret is None:
        # same landing time, relabeled so that the landing window is piece j_star
        ret = return_orbit(orbit, model, growth.theta + (natural - j_star) * orbit.tau)
    if graph is None:
        need = model.n * (orbit.N + 1) - P.n_u - model.n
        graph = build_stable_graph(ret, model, j_star, need if count is None else count)
    sigma = np.array([P.departure_phase() * growth.sigma])
    y = np.zeros((k, model.n, orbit.N + 1), dtype=complex)
    y[0] = P.evaluate(P.m, sigma)
    cur = np.real(y[0])
    for i in range(1, k):
        cur = step(cur, orbit.tau, model, orbit.N).segment
        y[i] = cur
    land = step(np.real(y[k - 1]), orbit.tau, model, orbit.N).segment
    h = np.linalg.lstsq(graph.V, (land - graph.base).reshape(-1), rcond=None)[0] if graph.count else np.zeros(0)
    state = HomoclinicState(
        complex(orbit.tau),
        np.asarray(orbit.eta, dtype=complex) if model.d else np.zeros(0, complex),
        P.lam.astype(complex).copy(),
        P.p.astype(complex).copy(),
        sigma.astype(complex),
        _E_end(P.p[-1, :, 0, :]).astype(complex),
        h.astype(complex),
        y,
    )
    prob = HomoclinicProblem(model, graph, P.gamma_target(), P.m, P.N, P.mis, k, float(ret.tau))
    return prob, state


# -- solve ---------------------------------------------------------------------------------


@dataclass
class HomoclinicSolution:
    problem: HomoclinicProblem
    state: HomoclinicState
    newton: NewtonReport
    residual: float
    h_norm: float
    rcond: float
    delay_gap: float
    imag_residue: float
    solver: str

    @property
    def size(self) -> int:
        return self.problem.size

    @property
    def tau(self) -> float:
        return float(self.state.tau.real)


def _imag_residue(s: HomoclinicState, samples: int = 32) -> float:
    t = cs.chebyshev_points(samples)
    return float(np.abs(np.imag(cs.eval_points(s.y, t))).max())


def solve_homoclinic(
    prob: HomoclinicProblem,
    seed: HomoclinicState,
    tol: float = 1e-12,
    maxiter: int = 20,
    linear_solver: str = "auto",
    h_threshold: float | None = None,
) -> HomoclinicSolution:
    """Newton's method on the full system; the linear solver is dense or structured."""
    L = prob.layout
    kind = linear_solver
    if kind == "auto":
        kind = "dense" if prob.size <= DENSE_LIMIT else "structured"
    last: dict = {}

    def F(x):
        return _residual_vector(prob, L.unpack(x))

    def solve(x, r):
        s = L.unpack(x)
        solver = _make_solver(_assemble(prob, s), kind)
        last["solver"] = solver
        return solver.solve(r)

    x0 = L.pack(seed)
    log.info("homoclinic solve: %d unknowns, %s linear algebra", prob.size, kind)
    x, rep = newton(F, None, x0, tol=tol, maxiter=maxiter, solve=solve)
    s = L.unpack(x)
    try:
        rc = _make_solver(_assemble(prob, s), kind).rcond()
    except SingularMatrixError:
        rc = 0.0
    sol = HomoclinicSolution(
        prob,
        s,
        rep,
        rep.final_residual,
        float(np.abs(s.h).sum()),  # columns of V have unit norm, so this bounds the landing offset
        rc,
        abs(s.tau.real - prob.tau_return),
        _imag_residue(s),
        kind,
    )
    if h_threshold is not None and sol.h_norm > h_threshold:
        raise NewtonError(f"landing distance {sol.h_norm:.3e} exceeds {h_threshold:.1e}", rep)
    return sol


def transversality_report(
    sol: HomoclinicSolution,
    jacobian: np.ndarray | None = None,
    h_threshold: float = 1e-8,
    rcond_threshold: float = 1e-12,
) -> dict:
    """Structured diagnostics; a dense ``jacobian`` overrides the stored condition estimate."""
    rc = sol.rcond
    if jacobian is not None:
        try:
            rc = LU(jacobian).rcond()
        except SingularMatrixError:
            rc = 0.0
    res = sol.newton.residuals
    ratios = [res[i + 1] / res[i] for i in range(len(res) - 1) if res[i] > 0]
    certified = bool(rc >= rcond_threshold)
    return {
        "unknowns": sol.size,
        "k": sol.problem.k,
        "j_star": sol.problem.graph.j_star,
        "stable_count": sol.problem.graph.count,
        "residual": sol.residual,
        "newton_iterations": sol.newton.iterations,
        "residual_history": list(res),
        "convergence_ratios": ratios,
        "quadratic_tail": sol.newton.quadratic_tail,
        "h_l1": sol.h_norm,
        "h_threshold": h_threshold,
        "distance_pass": bool(sol.h_norm <= h_threshold),
        "rcond": rc,
        "rcond_threshold": rcond_threshold,
        "transversality": "numerically invertible Jacobian" if certified else "no certificate",
        "certificate": certified,
        "tau": sol.tau,
        "tau_return": sol.problem.tau_return,
        "delay_gap": sol.delay_gap,
        "imag_residue": sol.imag_residue,
        "eta_max": float(np.abs(sol.state.eta).max()) if sol.state.eta.size else 0.0,
        "linear_solver": sol.solver,
    }
