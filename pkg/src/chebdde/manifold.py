"""Local unstable manifold of a periodic orbit by the parameterization method.

The manifold is ``P_j(sigma) = sum_alpha p_{j,alpha} sigma**alpha`` for each
segment ``j``, conjugating the unrolled step map to multiplication by
``lambda``. Order by order the coefficients solve

    (lambda**alpha (I - K1) - K2) p_alpha = R_alpha,

where ``K1`` and ``K2`` are the linearized step operators at the orbit and
``R_alpha`` only involves coefficients of lower total degree.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import chebseq as cs
from . import taylorcheb as tc
from .floquet import FloquetData, step_blocks
from .linsolve import LU, SingularMatrixError
from .models import PolyDDEModel, stack, taylor_algebra
from .periodic import SegmentedOrbit
from .stepper import step

log = logging.getLogger(__name__)

__all__ = [
    "ResonanceError",
    "NoReturnError",
    "ManifoldParam",
    "assemble_K1_K2",
    "assemble_R_alpha",
    "solve_manifold",
    "conjugacy_residual",
    "mobius_residual",
    "ReturnReport",
    "OrbitShifter",
    "grow_boundary",
]


class ResonanceError(np.linalg.LinAlgError):
    pass


class NoReturnError(RuntimeError):
    pass


@dataclass
class ManifoldParam:
    p: np.ndarray  # (m, n, M, N + 1) complex
    lam: np.ndarray  # (n_u,)
    gamma: np.ndarray  # (n_u,) moduli of the first-order endpoint values
    tau: float
    mis: tc.MultiIndexSet
    orbit: SegmentedOrbit
    eta: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    min_sigma: float = float("nan")  # smallest singular-value estimate over the order matrices

    @property
    def m(self) -> int:
        return self.p.shape[0]

    @property
    def n(self) -> int:
        return self.p.shape[1]

    @property
    def N(self) -> int:
        return self.p.shape[-1] - 1

    @property
    def n_u(self) -> int:
        return self.mis.n_u

    @property
    def coefficient_count(self) -> int:
        return int(self.p.size)

    def gamma_target(self) -> np.ndarray:
        """Value at ``t = 1`` of the first component of ``p_{m, e_l}`` (complex)."""
        return np.array([cs.eval_point(self.p[-1, 0, self.mis.unit(l)], 1.0) for l in range(self.n_u)])

    def evaluate(self, j: int, sigma) -> np.ndarray:
        """``P_j(sigma)`` for 1-based cyclic ``j``."""
        return tc.eval_taylor(self.p[(j - 1) % self.m], sigma, self.mis)

    def real_slice(self, j: int, s: float) -> np.ndarray:
        return tc.real_slice(self.p, (j - 1) % self.m + 1, s, self.m, self.mis)

    def departure_phase(self) -> complex:
        """Rotation making the last piece real on its slice (``n_u = 1``)."""
        return np.exp(1j * (self.m - 1) * np.pi / self.m)


def assemble_K1_K2(orbit: SegmentedOrbit, model: PolyDDEModel, N: int | None = None, tau: float | None = None):
    """Block-diagonal ``K1`` and block-cyclic ``K2`` on ``m`` stacked segments.

    Block row ``j`` uses ``(c_j, c_{j-1})``; ``K2`` places its block in
    column ``j - 1``.
    """
    N = orbit.N if N is None else N
    m, n = orbit.m, model.n
    nb = n * (N + 1)
    K1 = np.zeros((m * nb, m * nb))
    K2 = np.zeros((m * nb, m * nb))
    for j in range(1, m + 1):
        A, B = step_blocks(j - 1 if j > 1 else m, orbit, model, N, tau)
        r = slice((j - 1) * nb, j * nb)
        K1[r, r] = np.eye(nb) - A
        c = (j - 2) % m
        K2[r, c * nb : (c + 1) * nb] = B
    return K1, K2


def _f_taylor(model: PolyDDEModel, x, y, mis: tc.MultiIndexSet) -> np.ndarray:
    return stack(model.rhs(list(x), list(y), taylor_algebra(mis)))


def assemble_R_alpha(
    pos: int,
    p: np.ndarray,
    lam,
    tau: float,
    model: PolyDDEModel,
    mis: tc.MultiIndexSet,
    N: int | None = None,
) -> np.ndarray:
    """Right-hand side for the multi-index at position ``pos``; shape ``(m, n, N + 1)``.

    Only coefficients of total degree below ``|alpha|`` are read.
    """
    N = cs.order(p) if N is None else N
    k = int(mis.degree[pos])
    low = tc.multi_indices(mis.n_u, k)  # graded order: a prefix of ``mis``
    M = low.size
    q = np.array(p[:, :, :M, :], copy=True)
    q[:, :, low.degree == k, :] = 0
    lp = tc.lambda_powers(lam, low)
    m = p.shape[0]
    out = np.zeros((m, p.shape[1], N + 1), dtype=complex)
    for j in range(m):
        cur = q[j] * lp[:, None]
        prev = q[j - 1]
        f = _f_taylor(model, cur, prev, low)
        out[j] = cs.pad(cs.integ_op_S(0.5 * tau * f[:, pos, :]), N)
    return out


def _first_order(fd: FloquetData, mis: tc.MultiIndexSet, gamma: np.ndarray) -> np.ndarray:
    """Eigenvector chains scaled so that ``|v_{m,l}(1)|`` (first component) equals ``gamma_l``."""
    out = []
    for l in range(mis.n_u):
        v = fd.vectors[l]
        end = cs.eval_point(v[-1, 0], 1.0)
        if abs(end) == 0:
            raise ValueError("eigenvector vanishes at the phase point; cannot normalize")
        out.append(v * (gamma[l] / abs(end)))
    return np.array(out)


def solve_manifold(
    orbit: SegmentedOrbit,
    fd: FloquetData,
    gamma=None,
    order: int = 15,
    model: PolyDDEModel | None = None,
    auto_gamma: bool | tuple[float, float] = True,
) -> ManifoldParam:
    """Fill all Taylor orders up to ``order`` by the recurrence.

    With ``auto_gamma`` the first-order scaling is rescaled afterwards so
    that the l1 norm of the top-order slice lies in ``[1e-14, 1e-10]``
    (target ``1e-12``); this is exact because ``p_alpha`` is homogeneous of
    degree ``|alpha|`` in the scaling.
    """
    if model is None:
        raise ValueError("model is required")
    n_u = fd.n_u
    if n_u < 1:
        raise ValueError("orbit has no unstable multiplier")
    mis = tc.multi_indices(n_u, order)
    gamma = np.ones(n_u) if gamma is None else np.atleast_1d(np.asarray(gamma, dtype=float))
    m, n, N = orbit.m, model.n, orbit.N
    nb = n * (N + 1)
    lam = fd.lam
    p = np.zeros((m, n, mis.size, N + 1), dtype=complex)
    p[:, :, 0, :] = orbit.segments
    first = _first_order(fd, mis, gamma)
    for l in range(n_u):
        p[:, :, mis.unit(l), :] = first[l]
    K1, K2 = assemble_K1_K2(orbit, model, N)
    I = np.eye(m * nb)
    lp = tc.lambda_powers(lam, mis)
    min_sigma = np.inf
    for pos in range(mis.size):
        if mis.degree[pos] < 2:
            continue
        R = assemble_R_alpha(pos, p, lam, orbit.tau, model, mis, N)
        A = lp[pos] * (I - K1) - K2
        try:
            lu = LU(A)
        except SingularMatrixError as exc:
            raise ResonanceError(f"order matrix singular at alpha={mis.indices[pos]}") from exc
        sig = lu.rcond() * lu.anorm
        min_sigma = min(min_sigma, sig)
        if sig < 1e-10:
            raise ResonanceError(f"near resonance at alpha={mis.indices[pos]} (sigma ~ {sig:.2e})")
        p[:, :, pos, :] = lu.solve(R.reshape(-1)).reshape(m, n, N + 1)
    P = ManifoldParam(p, lam.copy(), gamma.copy(), orbit.tau, mis, orbit, np.zeros(orbit.d, complex), float(min_sigma))
    if auto_gamma:
        lo, hi = (1e-14, 1e-10) if auto_gamma is True else auto_gamma
        P = rescale(P, target=np.sqrt(lo * hi))
    log.info("manifold: %d coefficients, gamma=%s, min sigma %.2e", P.coefficient_count, P.gamma, P.min_sigma)
    return P


def top_order_norm(P: ManifoldParam) -> float:
    top = P.mis.degree == P.mis.order
    return cs.norm_l1nu(P.p[:, :, top, :])


def rescale(P: ManifoldParam, factor: float | None = None, target: float | None = None) -> ManifoldParam:
    """Scale ``sigma`` by ``factor`` (or pick it so the top-order norm hits ``target``)."""
    if factor is None:
        if target is None:
            raise ValueError("factor or target required")
        factor = (target / top_order_norm(P)) ** (1.0 / P.mis.order)
    p = P.p * (factor ** P.mis.degree)[:, None]
    return ManifoldParam(p, P.lam, P.gamma * factor, P.tau, P.mis, P.orbit, P.eta, P.min_sigma)


def conjugacy_residual(P: ManifoldParam, model: PolyDDEModel, sigmas, samples: int = 64) -> float:
    """Max over ``sigmas`` and segments of ``|P_j(lambda sigma) - F(P_{j-1}(sigma))|``."""
    worst = 0.0
    t = cs.chebyshev_points(samples)
    for s in np.atleast_1d(sigmas):
        sig = np.atleast_1d(s)
        for j in range(1, P.m + 1):
            img = step(P.evaluate(j - 1, sig), P.tau, model, P.N).segment
            with warnings.catch_warnings():
                # lambda sigma leaves the unit disk by design
                warnings.simplefilter("ignore")
                ref = P.evaluate(j, P.lam * sig)
            worst = max(worst, float(np.abs(cs.eval_points(img - ref, t)).max()))
    return worst


def mobius_residual(P: ManifoldParam, model: PolyDDEModel, sigmas, j: int = 1, samples: int = 64) -> float:
    """Max of ``|F^m(P_j(sigma / |mu|)) - P_j(-sigma)|`` for a negative multiplier."""
    mu = P.lam[0] ** P.m
    if not (abs(mu.imag) < 1e-8 * abs(mu) and mu.real < 0):
        raise ValueError("identity only holds for a negative real multiplier")
    t = cs.chebyshev_points(samples)
    worst = 0.0
    for s in np.atleast_1d(sigmas):
        seg = P.evaluate(j, s / abs(mu))
        for _ in range(P.m):
            seg = step(seg, P.tau, model, P.N).segment
        worst = max(worst, float(np.abs(cs.eval_points(seg - P.evaluate(j, -s), t)).max()))
    return worst


# -- growth and return detection ---------------------------------------------------


class OrbitShifter:
    """Delay-length windows of a periodic orbit at arbitrary time shifts.

    Time ``0`` is the start of segment 1; segment ``j`` ends at ``j * tau``.
    ``window(T)`` is the piece of solution on ``[T - tau, T]``.
    """

    def __init__(self, orbit: SegmentedOrbit, samples: int = 32, component: int = 0):
        self.orbit = orbit
        self.tau = orbit.tau
        self.period = orbit.m * orbit.tau
        self.t = cs.chebyshev_points(samples)
        self.component = component
        self.segs = np.real(orbit.segments[:, component, :])

    def values(self, times: np.ndarray) -> np.ndarray:
        times = np.mod(times, self.period)
        k = np.clip(np.floor(times / self.tau).astype(int), 0, self.orbit.m - 1)
        loc = np.clip(2 * (times - k * self.tau) / self.tau - 1, -1, 1)
        out = np.empty(times.shape)
        for j in np.unique(k):
            sel = k == j
            out[sel] = cs.eval_points(self.segs[j], loc[sel])
        return out

    def window(self, T: float) -> np.ndarray:
        return self.values(T - self.tau + (self.t + 1) * self.tau / 2)

    def distance(self, seg: np.ndarray, grid: int = 48) -> tuple[float, float]:
        """``min_T sup |seg - window(T)|`` on the sample points; returns ``(distance, T)``."""
        y = np.real(cs.eval_points(np.atleast_2d(seg)[self.component], self.t))
        Ts = np.linspace(0, self.period, grid * self.orbit.m, endpoint=False)
        times = Ts[:, None] - self.tau + (self.t[None, :] + 1) * self.tau / 2
        D = np.abs(self.values(times.ravel()).reshape(times.shape) - y[None, :]).max(axis=1)
        i = int(np.argmin(D))
        h = self.period / Ts.size

        def obj(T):
            return float(np.abs(self.window(T) - y).max())

        res = minimize_scalar(obj, bounds=(Ts[i] - h, Ts[i] + h), method="bounded", options={"xatol": 1e-13})
        best_T = float(res.x) if res.fun < D[i] else float(Ts[i])
        return min(float(res.fun), float(D[i])), best_T % self.period

    def decompose(self, T: float, centered: bool = False) -> tuple[int, float, float]:
        """Split a window end time into ``(j*, theta, phase)``.

        ``T = j* tau + theta`` with ``theta`` in ``[-tau/2, tau/2)`` (or
        ``[0, tau)`` when not centered); ``phase`` is the orbit value at
        ``theta``, i.e. the anchor of the shifted orbit whose ``j*``-th piece
        is ``window(T)``.
        """
        m, tau = self.orbit.m, self.tau
        if centered:
            j = int(np.floor(T / tau + 0.5))
        else:
            j = int(np.floor(T / tau))
        theta = T - j * tau
        j = (j - 1) % m + 1
        phase = float(self.values(np.array([theta]))[0])
        return j, theta, phase


@dataclass
class ReturnReport:
    k: int
    j_star: int
    phase: float
    theta: float
    sigma: float  # departure parameter on the real slice of the last piece
    distance: float
    distances: list[float]  # best distance per iterate count
    iterations: int  # k + 1, counting the departure point

    def to_dict(self) -> dict:
        return dict(
            k=self.k,
            j_star=self.j_star,
            phase=self.phase,
            theta=self.theta,
            sigma=self.sigma,
            distance=self.distance,
            distances=list(self.distances),
            iterations=self.iterations,
        )


def _departure(P: ManifoldParam, s: float) -> np.ndarray:
    return np.real(P.evaluate(P.m, P.departure_phase() * s))


class _Trajectory:
    """Forward iterates of one departure point, extended on demand."""

    def __init__(self, P: ManifoldParam, model: PolyDDEModel, s: float, shifter: "OrbitShifter"):
        self.P, self.model, self.shifter = P, model, shifter
        self.seg = _departure(P, s)
        self.dist = [shifter.distance(self.seg)]
        self.dead = False

    def upto(self, i: int) -> tuple[float, float]:
        """``(distance, T)`` after ``i`` steps (infinite once a step fails)."""
        while len(self.dist) <= i and not self.dead:
            try:
                self.seg = step(self.seg, self.P.tau, self.model, self.P.N).segment
                self.dist.append(self.shifter.distance(self.seg))
            except Exception as exc:  # noqa: BLE001 - a failed trajectory just drops out
                log.debug("departure trajectory dropped: %s", exc)
                self.dead = True
        return self.dist[i] if i < len(self.dist) else (np.inf, np.nan)


def _polish(P, model, shifter, i, s0, w, lo, d0):
    sign = np.sign(s0)
    a, b = max(s0 - w, lo) if sign > 0 else s0 - w, min(s0 + w, 1.0) if sign > 0 else s0 + w
    if sign < 0:
        a, b = max(a, -1.0), min(b, -lo)

    def obj(s):
        return _Trajectory(P, model, s, shifter).upto(i)[0]

    res = minimize_scalar(obj, bounds=(a, b), method="bounded", options={"xatol": 1e-15})
    return float(res.x) if res.fun < d0 else s0


def grow_boundary(
    P: ManifoldParam,
    model: PolyDDEModel,
    max_steps: int,
    return_orbit: SegmentedOrbit | None = None,
    tol: float = 1e-4,
    samples: int = 64,
    refinements: int = 6,
    centered: bool = False,
    k: int | None = None,
    polish: bool = True,
) -> ReturnReport:
    """Iterate departure points from the manifold edge until one returns near the orbit.

    Departure points are ``Re P_m(omega s)`` on the real slice of the last
    piece with ``s`` covering the fundamental domain ``1/|mu| < |s| <= 1``
    on both sides. For each step count ``i = 0, 1, ...`` the distance to
    the nearest time-shifted window of the return orbit is minimized over
    ``s`` (grid of ``samples`` per side, then ``refinements`` zooms by 4x
    around the best point); the first count with a distance below ``tol``
    is reported as ``k``. Passing ``k`` skips detection and reports the
    best departure for that step count, which must still be within ``tol``. With ``polish`` the zoomed minimum
    is finished by a bounded scalar minimization in ``s``.
    """
    if P.n_u != 1:
        raise NotImplementedError("boundary growth is implemented for one unstable direction")
    orbit = return_orbit or P.orbit
    shifter = OrbitShifter(orbit)
    mu = abs(P.lam[0]) ** P.m
    lo = 1.0 / mu
    grid = np.concatenate([np.linspace(lo, 1, samples + 1)[1:], -np.linspace(lo, 1, samples + 1)[1:]])
    table: dict[float, _Trajectory] = {}

    def traj(s: float) -> _Trajectory:
        if s not in table:
            table[s] = _Trajectory(P, model, s, shifter)
        return table[s]

    width = (1 - lo) / samples
    best_s = None
    history: list[float] = []
    steps = range(max_steps + 1) if k is None else range(k, k + 1)
    for i in steps:
        pool = [float(s) for s in grid] + ([best_s] if best_s is not None else [])
        cur = min(pool, key=lambda s: traj(s).upto(i)[0])
        w = width
        for _ in range(refinements):
            sign = np.sign(cur)
            for s in np.linspace(cur - w, cur + w, 9):
                if lo <= sign * s <= 1.0:
                    traj(float(s)).upto(i)
            near = [s for s in table if abs(s - cur) <= w * (1 + 1e-12) and table[s].upto(i)[0] < np.inf]
            cur = min(near, key=lambda s: table[s].upto(i)[0])
            w /= 4
        if polish:
            cur = _polish(P, model, shifter, i, cur, 4 * w, lo, table[cur].upto(i)[0])
            traj(cur).upto(i)
        best_s = cur
        d, T = table[cur].upto(i)
        history.append(d)
        log.info("step %d: best distance %.3e at s=%.12f", i, d, cur)
        if d <= tol:
            j, theta, phase = shifter.decompose(T, centered)
            return ReturnReport(i, j, phase, theta, cur, d, history, i + 1)
        if k is not None:
            raise NoReturnError(f"no return within max_steps: k = {k} leaves distance {d:.3e} > tol {tol:.1e}")
    raise NoReturnError(f"no return within {max_steps} steps (best distance {min(history):.3e})")
