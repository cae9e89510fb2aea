"""Polynomial right-hand sides ``f(x, y)`` of delay equations ``u' = f(u(t), u(t - tau))``.

A polynomial is a list of monomials ``coef * x**xexp * y**yexp``. The same
polynomial is evaluated in three algebras (plain scalars, Chebyshev
sequences, Taylor-Chebyshev series) by swapping the multiplication rule;
partial derivatives are built symbolically once at construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import chebseq as cs
from . import taylorcheb as tc

__all__ = [
    "ModelDomainError",
    "Monomial",
    "Polynomial",
    "Algebra",
    "SCALAR",
    "CHEB",
    "taylor_algebra",
    "PolyDDEModel",
    "ikeda_model",
    "mackey_glass_model",
    "linear_model",
    "zero_model",
    "polynomial_model",
    "get_model",
    "inject_iota",
    "lift_history",
]


class ModelDomainError(ValueError):
    """State left the region where the model (or its embedding) is defined."""


@dataclass(frozen=True)
class Monomial:
    coef: float
    xexp: tuple[int, ...]
    yexp: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.xexp) + sum(self.yexp)


@dataclass(frozen=True)
class Polynomial:
    n: int
    terms: tuple[Monomial, ...] = ()

    @classmethod
    def from_terms(cls, n: int, terms: Sequence[tuple[float, Sequence[int], Sequence[int]]]) -> "Polynomial":
        merged: dict[tuple, float] = {}
        for coef, xe, ye in terms:
            key = (tuple(xe), tuple(ye))
            if len(key[0]) != n or len(key[1]) != n:
                raise ValueError("exponent length must equal n")
            merged[key] = merged.get(key, 0.0) + coef
        mons = tuple(Monomial(c, k[0], k[1]) for k, c in merged.items() if c != 0)
        return cls(n, mons)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def diff(self, which: str, i: int) -> "Polynomial":
        """Partial derivative with respect to ``x_i`` (``which='x'``) or ``y_i``."""
        out = []
        for t in self.terms:
            e = list(t.xexp if which == "x" else t.yexp)
            if e[i] == 0:
                continue
            c = t.coef * e[i]
            e[i] -= 1
            if which == "x":
                out.append((c, e, t.yexp))
            else:
                out.append((c, t.xexp, e))
        return Polynomial.from_terms(self.n, out)

    def __call__(self, x, y, alg: "Algebra" = None, cache: dict | None = None):
        alg = alg or SCALAR
        cache = {} if cache is None else cache
        total = None
        for t in self.terms:
            prod = None
            for var, exps in (("x", t.xexp), ("y", t.yexp)):
                src = x if var == "x" else y
                for i, e in enumerate(exps):
                    if e:
                        pw = _power(cache, var, i, e, src[i], alg)
                        prod = pw if prod is None else alg.mul(prod, pw)
            if prod is None:
                term = alg.const(t.coef, x[0])
            else:
                term = t.coef * prod
            total = term if total is None else alg.add(total, term)
        if total is None:
            return alg.const(0.0, x[0])
        return total


def _power(cache: dict, var: str, i: int, e: int, base, alg: "Algebra"):
    key = (var, i, e)
    if key not in cache:
        cache[key] = base if e == 1 else alg.mul(_power(cache, var, i, e - 1, base, alg), base)
    return cache[key]


@dataclass(frozen=True)
class Algebra:
    """Multiplication/addition rules for one coefficient representation."""

    name: str
    mul: Callable
    add: Callable
    const: Callable  # const(c, like) -> c as an element shaped like ``like``


def _scalar_const(c, like):
    return np.full_like(np.asarray(like, dtype=np.result_type(like, float)), c)


def _cheb_const(c, like):
    like = np.asarray(like)
    out = np.zeros(like.shape[:-1] + (1,), dtype=np.result_type(like, float))
    out[..., 0] = c
    return out


SCALAR = Algebra("scalar", np.multiply, np.add, _scalar_const)
CHEB = Algebra("cheb", cs.conv, cs.add, _cheb_const)


def taylor_algebra(mis: tc.MultiIndexSet) -> Algebra:
    """Taylor-Chebyshev algebra on ``mis`` (Taylor order is truncated to ``mis.order``)."""

    def mul(a, b):
        return tc.conv2(a, b, mis)

    def const(c, like):
        like = np.asarray(like)
        out = np.zeros(like.shape[:-1] + (1,), dtype=np.result_type(like, float))
        out[..., 0, 0] = c
        return out

    return Algebra(f"taylorcheb[{mis.n_u},{mis.order}]", mul, cs.add, const)


@dataclass
class PolyDDEModel:
    """``u' = f(u(t), u(t - tau))`` with polynomial ``f``.

    ``d`` counts the appended embedding coordinates; ``phi_at_point`` maps
    the physical value to the embedding values at a point.
    """

    name: str
    n: int
    d: int
    f: tuple[Polynomial, ...]
    params: dict = field(default_factory=dict)
    phi_at_point: Callable[[float], np.ndarray] | None = None
    positivity_floor: float | None = None

    def __post_init__(self):
        if self.n != 1 + self.d:
            raise ValueError("n must equal 1 + d")
        if len(self.f) != self.n:
            raise ValueError("f must have n components")
        self.D1 = tuple(tuple(fi.diff("x", j) for j in range(self.n)) for fi in self.f)
        self.D2 = tuple(tuple(fi.diff("y", j) for j in range(self.n)) for fi in self.f)

    # evaluation -----------------------------------------------------------

    def rhs(self, x, y, alg: Algebra = SCALAR) -> list:
        cache: dict = {}
        return [fi(x, y, alg, cache) for fi in self.f]

    def _jac(self, table, x, y, alg) -> list[list]:
        cache: dict = {}
        return [[None if p.is_zero else p(x, y, alg, cache) for p in row] for row in table]

    def jac1(self, x, y, alg: Algebra = SCALAR) -> list[list]:
        """``D_1 f`` entries; ``None`` marks an identically zero entry."""
        return self._jac(self.D1, x, y, alg)

    def jac2(self, x, y, alg: Algebra = SCALAR) -> list[list]:
        return self._jac(self.D2, x, y, alg)

    @property
    def has_D1(self) -> bool:
        return any(not p.is_zero for row in self.D1 for p in row)

    def f_scalar(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.array(self.rhs(list(x), list(y)))

    def check_domain(self, w_values: np.ndarray) -> None:
        if self.positivity_floor is None:
            return
        w = np.real(np.asarray(w_values))
        if np.any(~np.isfinite(w)) or np.any(w < self.positivity_floor):
            raise ModelDomainError(
                f"{self.name}: physical state fell below the positivity floor "
                f"{self.positivity_floor:g} (min {np.nanmin(w):.3e})"
            )


def stack(elements: list, N: int | None = None) -> np.ndarray:
    """Stack Chebyshev-algebra outputs of different orders into one array."""
    K = max(cs.order(e) for e in elements) if N is None else N
    return np.stack([cs.pad(np.asarray(e), K) for e in elements])


def polynomial_model(name: str, n: int, components, params=None, d: int | None = None, **kw) -> PolyDDEModel:
    """Build a model from per-component lists of ``(coef, xexp, yexp)`` triples."""
    polys = tuple(Polynomial.from_terms(n, terms) for terms in components)
    return PolyDDEModel(name, n, n - 1 if d is None else d, polys, params or {}, **kw)


def ikeda_model() -> PolyDDEModel:
    """Cubic Ikeda equation ``w' = y - y**3`` with ``y = w(t - tau)``."""
    return polynomial_model("cubic_ikeda", 1, [[(1.0, (0,), (1,)), (-1.0, (0,), (3,))]])


def linear_model(rate: float = 1.0) -> PolyDDEModel:
    """``u' = -rate * u`` (no delay dependence); useful as an analytic test case."""
    return polynomial_model("linear", 1, [[(-rate, (1,), (0,))]], {"rate": rate})


def zero_model(n: int = 1) -> PolyDDEModel:
    return PolyDDEModel("zero", n, n - 1, tuple(Polynomial(n) for _ in range(n)))


def mackey_glass_model(a: float = 1.0, b: float = 0.5, rho: float = 9.65, floor: float = 1e-6) -> PolyDDEModel:
    """Polynomial embedding of ``w' = -a w + b w(t-tau) / (1 + w(t-tau)**rho)``.

    State ``(w, v1, v2, v3)`` with ``v1 = w / (1 + w**rho)``,
    ``v2 = w**(rho - 2)``, ``v3 = 1 / w``. Writing ``g = -a w + b v1(t - tau)``:

        w'  = g
        v1' = v1 (v3 - rho v1 v2) g
        v2' = (rho - 2) v2 v3 g
        v3' = -v3**2 g
    """
    if not np.isfinite([a, b, rho]).all() or rho == 0:
        raise ValueError("parameters must be finite and rho nonzero")
    n = 4
    Z = (0, 0, 0, 0)

    def e(*idx):
        v = [0, 0, 0, 0]
        for i in idx:
            v[i] += 1
        return tuple(v)

    # g = -a w + b y1, expanded into each component
    g = [(-a, e(0), Z), (b, Z, e(1))]

    def times(cx, mono_x):
        return [(cx * c, tuple(p + q for p, q in zip(xe, mono_x)), ye) for c, xe, ye in g]

    comps = [
        list(g),
        times(1.0, e(1, 3)) + times(-rho, e(1, 1, 2)),
        times(rho - 2.0, e(2, 3)),
        times(-1.0, e(3, 3)),
    ]

    def phi(delta: float) -> np.ndarray:
        delta = float(delta)
        if delta <= 0:
            raise ModelDomainError("embedding requires a positive value")
        return np.array([delta / (1 + delta**rho), delta ** (rho - 2), 1 / delta])

    return polynomial_model(
        "mackey_glass",
        n,
        comps,
        {"a": a, "b": b, "rho": rho},
        phi_at_point=phi,
        positivity_floor=floor,
    )


_REGISTRY = {"cubic_ikeda": ikeda_model, "ikeda": ikeda_model, "mackey_glass": mackey_glass_model}


def get_model(name: str, **params) -> PolyDDEModel:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(set(_REGISTRY))}") from None
    return factory(**params)


def inject_iota(eta, N: int) -> np.ndarray:
    """Constant sequences ``eta_i`` of order ``N``, one per component."""
    eta = np.atleast_1d(np.asarray(eta))
    out = np.zeros((eta.size, N + 1), dtype=np.result_type(eta, float))
    out[:, 0] = eta
    return out


def lift_history(w: np.ndarray, model: PolyDDEModel) -> np.ndarray:
    """Sampled physical history ``w`` to the full state ``(w, phi(w))``; shape ``(n, len(w))``."""
    w = np.asarray(w, dtype=float)
    if model.d == 0:
        return w[None, :].copy()
    if model.phi_at_point is None:
        raise ValueError("model has embedding coordinates but no phi_at_point")
    if model.positivity_floor is not None and np.any(w <= 0):
        raise ModelDomainError("history must be strictly positive for this embedding")
    rest = np.stack([model.phi_at_point(x) for x in w], axis=1)
    return np.vstack([w[None, :], rest])
