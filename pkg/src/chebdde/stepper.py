"""Method of steps with Chebyshev segments.

One step maps a history segment ``phi`` on ``[-tau, 0]`` to the solution
segment ``u`` on the next delay interval. In the rescaled variable
``t in [-1, 1]`` the segment solves

    u = E(phi) + S((tau / 2) f(u, phi)),

which is solved here by Newton's method on the truncated coefficients.
``rk_oracle`` is an independent RK4 method-of-steps integrator used for
cross-checks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import chebseq as cs
from .linsolve import LU
from .models import CHEB, SCALAR, ModelDomainError, PolyDDEModel, stack

log = logging.getLogger(__name__)

__all__ = [
    "StepError",
    "StepResult",
    "step_defect",
    "step_jacobian",
    "step",
    "iterate",
    "rk_oracle",
    "find_periodic_candidate",
    "sample_segments",
    "segment_distance",
]


class StepError(RuntimeError):
    pass


@dataclass
class StepResult:
    segment: np.ndarray
    newton_iters: int
    residual: float


def _as_vec(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi)
    return phi[None, :] if phi.ndim == 1 else phi


def step_defect(u: np.ndarray, phi: np.ndarray, tau: float, model: PolyDDEModel, N: int) -> np.ndarray:
    """``u - E(phi) - truncate(S((tau/2) f(u, phi)), N)``; shape ``(n, N + 1)``."""
    f = stack(model.rhs(list(u), list(phi), CHEB))
    rhs = cs.pad(cs.eval_op_E(phi), N) + cs.pad(cs.integ_op_S(0.5 * tau * f), N)
    return cs.pad(u, N) - rhs


def step_jacobian(u: np.ndarray, phi: np.ndarray, tau: float, model: PolyDDEModel, N: int) -> np.ndarray:
    """Derivative of ``step_defect`` with respect to ``u`` (dense, ``n(N+1)`` square)."""
    n = model.n
    J = np.eye(n * (N + 1), dtype=np.result_type(u, phi, float))
    if not model.has_D1:
        return J
    D1 = model.jac1(list(u), list(phi), CHEB)
    for i in range(n):
        for j in range(n):
            if D1[i][j] is not None:
                blk = cs.integ_mult_matrix(0.5 * tau * np.asarray(D1[i][j]), N)
                J[i * (N + 1) : (i + 1) * (N + 1), j * (N + 1) : (j + 1) * (N + 1)] -= blk
    return J


def _res_norm(r: np.ndarray) -> float:
    return cs.norm_l1nu(r)


def step(
    phi: np.ndarray,
    tau: float,
    model: PolyDDEModel,
    N: int | None = None,
    tol: float = 1e-13,
    maxiter: int = 25,
    picard: int = 5,
    guess: np.ndarray | None = None,
    tail_tol: float = 1e-6,
) -> StepResult:
    """Advance one delay interval.

    Convergence is declared when the l1 defect is below ``tol`` times
    ``max(1, |u|)`` or when the Newton correction stalls at rounding level.

    Initial guesses are tried in order: ``guess`` (if given), the history
    itself, a few fixed-point sweeps, and finally an ODE solve with the
    history frozen (tried right after ``guess`` for models with a
    positivity floor). A root whose last three coefficients exceed
    ``tail_tol * |u|`` is treated as spurious unless it came from the ODE
    guess.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    phi = _as_vec(phi)
    N = cs.order(phi) if N is None else N
    phi = cs.pad(phi, N)
    if phi.shape[0] != model.n:
        raise ValueError(f"history has {phi.shape[0]} components, model expects {model.n}")

    def defect(u):
        return step_defect(u, phi, tau, model, N)

    if not model.has_D1:
        # f does not depend on the current state, so one evaluation is exact
        u = phi - defect(phi)
        r = _res_norm(defect(u))
        _check(model, u)
        return StepResult(u, 1, r)

    guesses = [
        ("supplied", None if guess is None else (lambda: cs.pad(_as_vec(guess), N).astype(phi.dtype, copy=True))),
        ("history", lambda: phi.copy()),
        ("picard", lambda: _picard_guess(defect, phi, picard)),
        ("ode", lambda: _ode_guess(phi, tau, model, N)),
    ]
    if model.positivity_floor is not None:
        # embedded models carry singular coordinates (1/w, w**rho); crude
        # guesses rarely land in Newton's basin, so go to the ODE first
        guesses.insert(1, guesses.pop())
    total = 0
    last = ""
    for name, make in guesses:
        if make is None:
            continue
        try:
            with np.errstate(all="ignore"):
                u0 = make()
            u, it, res = _newton_step(u0, phi, tau, model, N, defect, tol, maxiter)
            if name != "ode" and N >= 6:
                tail = float(np.abs(u[:, -3:]).max())
                if tail > tail_tol * cs.norm_l1nu(u):
                    raise _Diverged(f"root with unresolved tail ({tail:.2e}) rejected", it)
            if name != "ode" and model.positivity_floor is not None:
                _check(model, u)
        except (_Diverged, ModelDomainError) as exc:
            it_used = getattr(exc, "iters", 0)
            total += it_used
            last = f"{name}: {exc}"
            log.debug("step guess %s failed: %s", name, exc)
            continue
        total += it
        _check(model, u)
        return StepResult(u, total, res)
    raise StepError(f"step did not converge from any initial guess ({last})")


class _Diverged(Exception):
    def __init__(self, msg: str, iters: int):
        super().__init__(msg)
        self.iters = iters


def _picard_guess(defect, phi, k):
    u = phi.copy()
    for _ in range(k):
        u = u - defect(u)
    if not np.all(np.isfinite(u)):
        raise _Diverged("fixed-point warm start overflowed", 0)
    return u


def _ode_guess(phi, tau, model, N):
    """Solve the step as an ODE in ``t`` with the history frozen, then interpolate.

    The history is replaced by a cubic spline through dense samples; the
    result only needs to land inside Newton's basin.
    """
    from scipy.integrate import solve_ivp
    from scipy.interpolate import CubicSpline

    n = model.n
    phir = np.real(phi)
    nodes = np.concatenate([[-1.0], cs.chebyshev_points(2 * (N + 1)), [1.0]])
    hist = CubicSpline(nodes, cs.eval_points(phir, nodes), axis=1)

    def rhs(t, x):
        return 0.5 * tau * np.array(model.rhs(list(x), list(hist(t)), SCALAR), dtype=float)

    u0 = np.real(cs.eval_point(phi, 1.0))
    tp = cs.chebyshev_points(2 * (N + 1))
    sol = solve_ivp(rhs, (-1.0, 1.0), u0, method="DOP853", t_eval=tp, rtol=1e-9, atol=1e-11)
    if not sol.success:
        raise _Diverged(f"ODE warm start failed: {sol.message}", 0)
    u = cs.pad(cs.from_values(sol.y.reshape(n, -1)), N)
    return u.astype(phi.dtype) if np.iscomplexobj(phi) else u


def _newton_step(u, phi, tau, model, N, defect, tol, maxiter):
    r = defect(u)
    res = _res_norm(r)
    it = 0
    prev_step = np.inf
    increases = 0
    while True:
        if not np.isfinite(res):
            raise _Diverged("defect is not finite", it)
        scale = max(1.0, cs.norm_l1nu(u))
        if res <= tol * scale:
            return u, it, res
        if it >= maxiter:
            raise _Diverged(f"no convergence in {maxiter} Newton iterations (defect {res:.3e})", it)
        J = step_jacobian(u, phi, tau, model, N)
        du = LU(J).solve(r.reshape(-1)).reshape(u.shape)
        with np.errstate(all="ignore"):
            u = u - du
            r_new = defect(u)
        res_new = _res_norm(r_new)
        it += 1
        increases = increases + 1 if not res_new < res else 0
        if increases >= 2 or (it == 1 and not res_new < res):
            raise _Diverged(f"defect grew ({res:.3e} -> {res_new:.3e})", it)
        step_norm = cs.norm_l1nu(du)
        r, res = r_new, res_new
        # rounding floor: corrections stop shrinking at machine precision
        if step_norm <= 64 * np.finfo(float).eps * scale and step_norm >= 0.25 * prev_step:
            return u, it, res
        prev_step = step_norm


def _check(model: PolyDDEModel, u: np.ndarray) -> None:
    if model.positivity_floor is not None:
        model.check_domain(cs.eval_points(u[0], cs.chebyshev_points(2 * u.shape[-1])))


def iterate(phi: np.ndarray, tau: float, model: PolyDDEModel, N: int | None = None, k: int = 1, **kw) -> list[np.ndarray]:
    """Segments ``F(phi), F^2(phi), ..., F^k(phi)``."""
    out = []
    cur = _as_vec(phi)
    for _ in range(k):
        cur = step(cur, tau, model, N, **kw).segment
        out.append(cur)
    return out


def rk_oracle(
    history: Callable[[np.ndarray], np.ndarray] | np.ndarray,
    tau: float,
    model: PolyDDEModel,
    t_end: float,
    h: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 method of steps with cubic Hermite interpolation of the past.

    ``history`` is either a callable ``s -> (n, len(s))`` on ``[-tau, 0]`` or an
    array of samples ``(n, tau/h + 1)`` on the grid ``-tau, -tau + h, ..., 0``.
    Returns the grid ``t = 0, h, ..., t_end`` and the solution samples.
    """
    ratio = tau / h
    q = int(round(ratio))
    if abs(ratio - q) > 1e-9 * max(1.0, ratio):
        raise ValueError("h must divide tau")
    steps = int(round(t_end / h))
    n = model.n
    s_hist = -tau + h * np.arange(q + 1)
    if callable(history):
        past = np.asarray(history(s_hist), dtype=float).reshape(n, q + 1)
        past_mid = np.asarray(history(s_hist[:-1] + h / 2), dtype=float).reshape(n, q)
    else:
        past = np.asarray(history, dtype=float).reshape(n, q + 1)
        dpast = np.gradient(past, h, axis=1)
        past_mid = 0.5 * (past[:, :-1] + past[:, 1:]) + h * (dpast[:, :-1] - dpast[:, 1:]) / 8

    # y[:, i] stores the solution at grid point -tau + i h
    y = np.zeros((n, q + steps + 1))
    dy = np.zeros_like(y)
    y[:, : q + 1] = past
    ymid = np.zeros((n, q + steps))
    ymid[:, :q] = past_mid

    def f(x, d):
        return np.array(model.rhs(list(x), list(d), SCALAR), dtype=float)

    dy[:, q] = f(y[:, q], y[:, 0])
    for k in range(steps):
        i = q + k
        dm, d1 = ymid[:, i - q], y[:, i - q + 1]
        x = y[:, i]
        k1 = dy[:, i]
        k2 = f(x + 0.5 * h * k1, dm)
        k3 = f(x + 0.5 * h * k2, dm)
        k4 = f(x + h * k3, d1)
        y[:, i + 1] = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        dy[:, i + 1] = f(y[:, i + 1], y[:, i + 1 - q])
        ymid[:, i] = 0.5 * (y[:, i] + y[:, i + 1]) + h * (dy[:, i] - dy[:, i + 1]) / 8
    t = h * np.arange(steps + 1)
    return t, y[:, q:]


def sample_segments(segments, tau: float, pts: int = 32, t0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate segments into a time series on equispaced points per segment.

    Segment ``j`` (0-based) covers ``[t0 + j tau, t0 + (j + 1) tau]``; the
    shared endpoints are emitted once.
    """
    tloc = np.linspace(-1, 1, pts + 1)[:-1]
    ts, vs = [], []
    for j, seg in enumerate(segments):
        seg = _as_vec(seg)
        ts.append(t0 + j * tau + (tloc + 1) * tau / 2)
        vs.append(cs.eval_points(seg, tloc))
    last = _as_vec(segments[-1])
    ts.append(np.array([t0 + len(segments) * tau]))
    vs.append(cs.eval_points(last, np.array([1.0])))
    return np.concatenate(ts), np.concatenate(vs, axis=-1)


def segment_distance(a: np.ndarray, b: np.ndarray, samples: int = 32, component: int | None = None) -> float:
    """Sup-norm distance on Chebyshev-Gauss points (optionally one component)."""
    t = cs.chebyshev_points(samples)
    A = cs.eval_points(_as_vec(a), t)
    B = cs.eval_points(_as_vec(b), t)
    if component is not None:
        A, B = A[component], B[component]
    return float(np.abs(A - B).max())


def find_periodic_candidate(
    trajectory: list[np.ndarray],
    tol: float = 0.05,
    window: int | None = None,
    max_m: int | None = None,
    component: int = 0,
) -> tuple[int, float, int] | None:
    """Smallest ``m`` with ``|seg[j+m+i] - seg[j+i]| <= tol`` for ``i < window``.

    Returns ``(m, delta, j)``: the period in delays, the endpoint value of
    segment ``j + m - 1`` (first component) and the start index, or ``None``.
    ``window`` defaults to ``m``, i.e. a whole period must recur.
    """
    L = len(trajectory)
    max_m = max_m or L // 2
    for m in range(1, max_m + 1):
        w = window or m
        for j in range(0, L - m - w + 1):
            if all(
                segment_distance(trajectory[j + m + i], trajectory[j + i], component=component) <= tol
                for i in range(w)
            ):
                delta = float(np.real(cs.eval_point(_as_vec(trajectory[j + m - 1])[component], 1.0)))
                return m, delta, j
    return None
