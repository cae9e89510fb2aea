"""Dense linear algebra kernels and a Newton driver."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

log = logging.getLogger(__name__)

__all__ = [
    "SingularMatrixError",
    "NewtonError",
    "LU",
    "lu_solve",
    "rcond",
    "eig",
    "NewtonReport",
    "newton",
]


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class NewtonError(RuntimeError):
    def __init__(self, msg: str, report: "NewtonReport"):
        super().__init__(msg)
        self.report = report


class LU:
    """LU factorization with partial pivoting plus a 1-norm condition estimate."""

    def __init__(self, A: np.ndarray, pivot_tol: float = 0.0):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        self.n = A.shape[0]
        self.anorm = float(np.abs(A).sum(axis=0).max()) if self.n else 0.0
        with warnings.catch_warnings():
            # an exact zero pivot is reported below as SingularMatrixError
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self.lu, self.piv = sla.lu_factor(A, check_finite=True)
        diag = np.abs(np.diag(self.lu))
        if self.n and diag.min() <= pivot_tol * max(diag.max(), 1.0):
            raise SingularMatrixError(f"zero pivot (min |u_ii| = {diag.min():.3e})")

    def solve(self, b: np.ndarray, trans: int = 0) -> np.ndarray:
        return sla.lu_solve((self.lu, self.piv), b, trans=trans, check_finite=False)

    def rcond(self) -> float:
        """Reciprocal 1-norm condition number estimate (LAPACK gecon)."""
        if self.n == 0:
            return 1.0
        gecon = lapack.get_lapack_funcs("gecon", (self.lu,))
        rc, info = gecon(self.lu, self.anorm, norm="1")
        if info != 0:
            raise np.linalg.LinAlgError(f"gecon failed (info={info})")
        return float(rc)


def lu_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    return LU(A).solve(b)


def rcond(A: np.ndarray) -> float:
    """Reciprocal condition estimate; 0.0 for exactly singular matrices."""
    try:
        return LU(A).rcond()
    except SingularMatrixError:
        return 0.0


def eig(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs sorted by decreasing modulus; columns of the second output are unit 2-norm."""
    w, V = sla.eig(A)
    idx = np.argsort(-np.abs(w), kind="stable")
    return w[idx], V[:, idx]


@dataclass
class NewtonReport:
    iterations: int = 0
    residuals: list[float] = field(default_factory=list)
    step_norms: list[float] = field(default_factory=list)
    converged: bool = False
    message: str = ""

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")

    @property
    def quadratic_tail(self) -> bool:
        """True when the last contracting step looks at least superlinear."""
        r = [x for x in self.residuals if x > 0]
        if len(r) < 3:
            return True
        # observed order from the last three nonzero residuals
        r0, r1, r2 = r[-3:]
        if r1 >= r0 or r2 >= r1:
            return r2 < 1e-13
        q = np.log(r2 / r1) / np.log(r1 / r0)
        return bool(q >= 1.5 or r2 < 1e-13)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residuals": list(self.residuals),
            "step_norms": list(self.step_norms),
            "converged": self.converged,
            "quadratic_tail": self.quadratic_tail,
            "message": self.message,
        }


def newton(
    F: Callable[[np.ndarray], np.ndarray],
    J: Callable[[np.ndarray], np.ndarray] | None,
    x0: np.ndarray,
    tol: float = 1e-12,
    maxiter: int = 25,
    step_tol: float = 0.0,
    solve: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
    norm: Callable[[np.ndarray], float] | None = None,
) -> tuple[np.ndarray, NewtonReport]:
    """Undamped Newton iteration.

    ``solve(x, r)`` may replace ``J`` when the Jacobian is applied through a
    structured factorization; it must return the correction ``J(x)^{-1} r``.
    Aborts after three consecutive residual increases.
    """
    if solve is None:
        if J is None:
            raise ValueError("either J or solve is required")

        def solve(x, r):
            return LU(J(x)).solve(r)

    norm = norm or (lambda r: float(np.abs(r).max()) if r.size else 0.0)
    rep = NewtonReport()
    x = np.array(x0, copy=True)
    r = F(x)
    rep.residuals.append(norm(r))
    increases = 0
    while True:
        if rep.residuals[-1] <= tol:
            rep.converged = True
            rep.message = "converged"
            return x, rep
        if rep.iterations >= maxiter:
            rep.message = f"no convergence after {maxiter} iterations"
            raise NewtonError(rep.message, rep)
        try:
            dx = solve(x, r)
        except (SingularMatrixError, np.linalg.LinAlgError) as exc:
            rep.message = f"singular Jacobian: {exc}"
            raise NewtonError(rep.message, rep) from exc
        x = x - dx
        rep.iterations += 1
        rep.step_norms.append(norm(dx))
        r = F(x)
        res = norm(r)
        log.debug("newton it=%d res=%.3e step=%.3e", rep.iterations, res, rep.step_norms[-1])
        increases = increases + 1 if res > rep.residuals[-1] else 0
        rep.residuals.append(res)
        if not np.isfinite(res):
            rep.message = "residual is not finite"
            raise NewtonError(rep.message, rep)
        if increases >= 3:
            rep.message = "residual grew on three consecutive iterations"
            raise NewtonError(rep.message, rep)
        if step_tol and rep.step_norms[-1] <= step_tol and res <= 100 * tol:
            rep.converged = True
            rep.message = "converged (step size)"
            return x, rep
