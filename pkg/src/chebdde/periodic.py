"""Multiple-shooting problems for m*tau-periodic orbits.

Unknowns are packed as ``[tau, eta (d entries), c_1, ..., c_m]`` where each
``c_j`` is an ``(n, N + 1)`` coefficient block. The residual is a phase
condition followed by the cyclic step defects

    E(c_{j-1}) + S((tau/2) f(c_j, c_{j-1}) + (0, iota(eta))) - c_j,

with ``c_0 = c_m``. All arithmetic is real.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import chebseq as cs
from .linsolve import NewtonReport, newton
from .models import CHEB, PolyDDEModel, inject_iota, lift_history, stack

__all__ = [
    "SegmentedOrbit",
    "pack",
    "unpack",
    "phase_target",
    "residual_F_circ",
    "residual_F_circ_elem",
    "residual",
    "jacobian_F_circ",
    "newton_periodic",
    "orbit_from_function",
    "orbit_from_samples",
    "trajectory_function",
    "phase_crossings",
]


@dataclass
class SegmentedOrbit:
    """``m`` Chebyshev segments of one ``m * tau``-periodic solution."""

    tau: float
    segments: np.ndarray  # (m, n, N + 1)
    eta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    delta: float = 0.0

    def __post_init__(self):
        self.segments = np.asarray(self.segments)
        if self.segments.ndim != 3:
            raise ValueError("segments must have shape (m, n, N + 1)")
        self.eta = np.atleast_1d(np.asarray(self.eta))

    @property
    def m(self) -> int:
        return self.segments.shape[0]

    @property
    def n(self) -> int:
        return self.segments.shape[1]

    @property
    def N(self) -> int:
        return self.segments.shape[2] - 1

    @property
    def d(self) -> int:
        return self.eta.size

    def segment(self, j: int) -> np.ndarray:
        """Segment ``j`` with cyclic 1-based indexing (``segment(0) == segment(m)``)."""
        return self.segments[(j - 1) % self.m]

    def endpoint_mismatch(self) -> float:
        """Largest jump between consecutive segments (cyclic)."""
        ends = cs.eval_point(self.segments, 1.0)
        starts = cs.eval_point(self.segments, -1.0)
        return float(np.abs(np.roll(ends, 1, axis=0) - starts).max())

    def shifted(self, shift: int) -> "SegmentedOrbit":
        """Relabel so that new segment ``j`` is old segment ``j + shift``."""
        segs = np.roll(self.segments, -shift, axis=0)
        delta = float(np.real(cs.eval_point(segs[-1, 0], 1.0)))
        return replace(self, segments=segs, delta=delta)


def pack(orbit: SegmentedOrbit, with_eta: bool | None = None) -> np.ndarray:
    with_eta = orbit.d > 0 if with_eta is None else with_eta
    parts = [np.atleast_1d(orbit.tau)]
    if with_eta:
        parts.append(orbit.eta)
    parts.append(orbit.segments.reshape(-1))
    return np.concatenate(parts)


def unpack(x: np.ndarray, m: int, n: int, N: int, d: int) -> tuple[float, np.ndarray, np.ndarray]:
    tau = x[0]
    eta = x[1 : 1 + d]
    segs = x[1 + d :].reshape(m, n, N + 1)
    return tau, eta, segs


def phase_target(model: PolyDDEModel, delta: float) -> np.ndarray:
    """``delta`` for plain models, ``(delta, phi(delta))`` for embedded ones."""
    if model.d == 0:
        return np.array([delta], dtype=float)
    return np.concatenate([[delta], model.phi_at_point(delta)])


def _defects(tau, eta, segs, model: PolyDDEModel, N: int) -> np.ndarray:
    m = segs.shape[0]
    out = np.empty(segs.shape, dtype=np.result_type(segs, tau, eta))
    iota = None
    if model.d:
        iota = np.vstack([np.zeros((1, 1)), inject_iota(eta, 0)])
    for j in range(m):
        cur, prev = segs[j], segs[j - 1]
        f = 0.5 * tau * stack(model.rhs(list(cur), list(prev), CHEB))
        if iota is not None:
            f = cs.add(f, iota)
        out[j] = cs.pad(cs.eval_op_E(prev), N) + cs.pad(cs.integ_op_S(f), N) - cur
    return out


def residual(x: np.ndarray, model: PolyDDEModel, delta: float, m: int, N: int) -> np.ndarray:
    """Residual of the plain (``d = 0``) or embedded problem, chosen by ``model.d``."""
    d = model.d
    tau, eta, segs = unpack(x, m, model.n, N, d)
    ends = cs.eval_point(segs[-1], 1.0)
    target = phase_target(model, delta)
    phase = ends[: 1 + d] - target if d else ends[:1] - target
    return np.concatenate([phase, _defects(tau, eta, segs, model, N).reshape(-1)])


def residual_F_circ(orbit: SegmentedOrbit, model: PolyDDEModel, delta: float) -> np.ndarray:
    if model.d != 0:
        raise ValueError("plain problem needs a model without embedding coordinates")
    return residual(pack(orbit, False), model, delta, orbit.m, orbit.N)


def residual_F_circ_elem(orbit: SegmentedOrbit, model: PolyDDEModel, delta: float) -> np.ndarray:
    if model.d == 0 or model.phi_at_point is None:
        raise ValueError("embedded problem needs a model with embedding coordinates")
    return residual(pack(orbit, True), model, delta, orbit.m, orbit.N)


def jacobian_F_circ(x: np.ndarray, model: PolyDDEModel, delta: float, m: int, N: int) -> np.ndarray:
    """Exact derivative of ``residual`` (dense)."""
    n, d = model.n, model.d
    tau, eta, segs = unpack(x, m, n, N, d)
    B = N + 1
    nb = n * B
    p = 1 + d  # phase rows
    J = np.zeros((p + m * nb, 1 + d + m * nb), dtype=np.result_type(x, float))
    col_c = 1 + d
    E = cs.eval_matrix(N)
    # phase rows: value at t = 1 of c_m, components 0..d
    for i in range(p):
        J[i, col_c + (m - 1) * nb + i * B : col_c + (m - 1) * nb + (i + 1) * B] = 2.0
        J[i, col_c + (m - 1) * nb + i * B] = 1.0
    S_unit = cs.pad(cs.integ_op_S(np.array([1.0])), N)
    for j in range(m):
        r0 = p + j * nb
        cur, prev = segs[j], segs[j - 1]
        jp = (j - 1) % m
        f = stack(model.rhs(list(cur), list(prev), CHEB))
        J[r0 : r0 + nb, 0] = cs.pad(cs.integ_op_S(0.5 * f), N).reshape(-1)
        for i in range(d):
            J[r0 + (1 + i) * B : r0 + (2 + i) * B, 1 + i] = S_unit
        D1 = model.jac1(list(cur), list(prev), CHEB)
        D2 = model.jac2(list(cur), list(prev), CHEB)
        cj = col_c + j * nb
        cp = col_c + jp * nb
        for a in range(n):
            rows = slice(r0 + a * B, r0 + (a + 1) * B)
            J[rows, cj + a * B : cj + (a + 1) * B] -= np.eye(B)
            J[rows, cp + a * B : cp + (a + 1) * B] += E
            for b in range(n):
                if D1[a][b] is not None:
                    J[rows, cj + b * B : cj + (b + 1) * B] += cs.integ_mult_matrix(0.5 * tau * np.asarray(D1[a][b]), N)
                if D2[a][b] is not None:
                    J[rows, cp + b * B : cp + (b + 1) * B] += cs.integ_mult_matrix(0.5 * tau * np.asarray(D2[a][b]), N)
    return J


def newton_periodic(
    guess: SegmentedOrbit,
    model: PolyDDEModel,
    delta: float | None = None,
    tol: float = 1e-12,
    maxiter: int = 30,
) -> tuple[SegmentedOrbit, NewtonReport]:
    """Newton's method on the periodic-orbit problem; ``eta`` is solved for when ``model.d > 0``."""
    delta = guess.delta if delta is None else delta
    m, N, d = guess.m, guess.N, model.d
    if guess.n != model.n:
        raise ValueError("orbit and model dimensions differ")
    eta = guess.eta if guess.d == d else np.zeros(d)
    x0 = pack(replace(guess, eta=eta), d > 0).astype(float)
    size = x0.size
    if size != 1 + d + m * model.n * (N + 1):
        raise AssertionError("periodic-orbit problem is not square")

    x, rep = newton(
        lambda x: residual(x, model, delta, m, N),
        lambda x: jacobian_F_circ(x, model, delta, m, N),
        x0,
        tol=tol,
        maxiter=maxiter,
    )
    tau, eta, segs = unpack(x, m, model.n, N, d)
    return SegmentedOrbit(float(tau), segs.copy(), eta.copy(), float(delta)), rep


# -- initial guesses ------------------------------------------------------------


def trajectory_function(segments: list[np.ndarray], tau: float, t0: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """Exact evaluation of concatenated Chebyshev segments; segment ``j`` covers ``[t0 + j tau, t0 + (j+1) tau]``."""
    segs = [np.atleast_2d(s) for s in segments]
    L = len(segs)

    def fun(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.clip(np.floor((t - t0) / tau).astype(int), 0, L - 1)
        loc = np.clip(2 * (t - t0 - k * tau) / tau - 1, -1.0, 1.0)
        out = np.empty((segs[0].shape[0], t.size))
        for j in np.unique(k):
            sel = k == j
            out[:, sel] = np.real(cs.eval_points(segs[j], loc[sel]))
        return out

    fun.t_range = (t0, t0 + L * tau)  # type: ignore[attr-defined]
    return fun


def phase_crossings(fun, delta: float, t_lo: float, t_hi: float, samples: int = 4000, component: int = 0) -> list[tuple[float, int]]:
    """Times in ``[t_lo, t_hi]`` where the chosen component crosses ``delta``, with crossing direction."""
    t = np.linspace(t_lo, t_hi, samples)
    g = fun(t)[component] - delta
    out = []
    for i in np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0):
        root = brentq(lambda s: fun(np.array([s]))[component, 0] - delta, t[i], t[i + 1], xtol=1e-14)
        out.append((root, int(np.sign(g[i + 1] - g[i]))))
    return out


def orbit_from_function(
    fun: Callable[[np.ndarray], np.ndarray],
    t_end: float,
    tau: float,
    m: int,
    N: int,
    model: PolyDDEModel,
    delta: float,
) -> SegmentedOrbit:
    """Cut ``m`` delay intervals ending at ``t_end`` out of a (vector) function of time.

    ``fun(t)`` returns the physical component or the full state. Embedded
    components are reconstructed from the physical one when missing.
    """
    segs = np.zeros((m, model.n, N + 1))
    tp = cs.chebyshev_points(2 * (N + 1))
    for j in range(m):
        a = t_end - (m - j) * tau
        tt = a + (tp + 1) * tau / 2
        vals = np.atleast_2d(fun(tt))
        if vals.shape[0] != model.n:
            vals = lift_history(vals[0], model)
        segs[j] = cs.pad(cs.from_values(vals), N)
    return SegmentedOrbit(tau, segs, np.zeros(model.d), float(delta))


def orbit_from_samples(
    t: np.ndarray,
    w: np.ndarray,
    tau: float,
    m: int,
    N: int,
    model: PolyDDEModel,
    delta: float,
    crossing: int = -1,
    direction: int | None = None,
) -> SegmentedOrbit:
    """Initial guess from a sampled time series spanning at least ``m * tau``.

    The series is interpolated with a cubic spline. The orbit is anchored at
    a time where the physical component equals ``delta``: among crossings
    that leave at least ``m * tau`` of history (optionally filtered by
    ``direction``), ``crossing`` picks one (default: the last).
    """
    t = np.asarray(t, dtype=float)
    w = np.atleast_2d(np.asarray(w, dtype=float))
    spline = CubicSpline(t, w, axis=1)

    def fun(s):
        return spline(s)

    found = [
        (tc_, dr)
        for tc_, dr in phase_crossings(fun, delta, t[0] + m * tau, t[-1], samples=max(4000, 4 * t.size))
        if direction is None or dr == direction
    ]
    if not found:
        raise ValueError(f"time series never crosses {delta} after one period of history")
    t_end = found[crossing][0]
    return orbit_from_function(fun, t_end, tau, m, N, model, delta)
