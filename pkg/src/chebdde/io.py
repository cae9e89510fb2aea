"""JSON artifacts and CSV plot data.

Floats are written with 17 significant digits, so a write/read round trip
is bit-exact. Arrays are stored as ``{"dtype", "shape", "data"}`` with the
data flattened in C order; complex arrays store ``[re, im]`` pairs. Every
artifact carries ``schema_version`` and ``kind``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import taylorcheb as tc
from .floquet import FloquetData
from .manifold import ManifoldParam, ReturnReport
from .models import PolyDDEModel, get_model
from .periodic import SegmentedOrbit

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


# -- low level -----------------------------------------------------------------


def _num(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    # keep the literal a float so that -0.0 and integral values survive a reload
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON text with 17-digit floats (``json.dumps`` uses shortest repr)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    return _scalar(obj)


def _scalar(v) -> str:
    if v is None or isinstance(v, (bool, np.bool_)):
        return json.dumps(None if v is None else bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _num(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return "[" + _num(v.real) + ", " + _num(v.imag) + "]"
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def encode_array(a) -> dict:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        flat = a.reshape(-1)
        data = np.stack([flat.real, flat.imag], axis=1).tolist()
        return {"dtype": "complex", "shape": list(a.shape), "data": [list(map(float, p)) for p in data]}
    return {"dtype": "real", "shape": list(a.shape), "data": [float(v) for v in a.reshape(-1)]}


def decode_array(d: dict) -> np.ndarray:
    shape = tuple(d["shape"])
    if d["dtype"] == "complex":
        pairs = np.asarray(d["data"], dtype=float).reshape(-1, 2)
        out = np.empty(len(pairs), dtype=complex)
        out.real, out.imag = pairs[:, 0], pairs[:, 1]  # arithmetic would lose signed zeros
        return out.reshape(shape)
    if d["dtype"] == "real":
        return np.asarray(d["data"], dtype=float).reshape(shape)
    raise SchemaError(f"unknown array dtype {d['dtype']!r}")


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(p) -> complex:
    return complex(p[0], p[1])


def write_json(path, obj: dict) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path, kind: str | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing input artifact {path}")
    obj = json.loads(path.read_text())
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema_version {obj.get('schema_version')!r}, expected {SCHEMA_VERSION}")
    if kind is not None and obj.get("kind") != kind:
        raise SchemaError(f"{path}: artifact kind {obj.get('kind')!r}, expected {kind!r}")
    return obj


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_csv_cell(v) for v in r])


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return _num(float(v))
    return v


def read_timeseries(path) -> tuple[np.ndarray, np.ndarray]:
    """CSV with a header row; first column time, remaining columns components."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1:].T


# -- domain objects -----------------------------------------------------------------


def _header(kind: str, model_spec: dict | None) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "kind": kind}
    if model_spec is not None:
        out["model"] = model_spec
    return out


def model_spec(name: str, params: dict) -> dict:
    return {"name": name, "params": {k: float(v) for k, v in params.items()}}


def model_from_spec(spec: dict) -> PolyDDEModel:
    return get_model(spec["name"], **spec.get("params", {}))


def orbit_to_dict(orbit: SegmentedOrbit, spec: dict | None = None, report=None) -> dict:
    out = _header("orbit", spec)
    out.update(
        tau=float(orbit.tau),
        delta=float(orbit.delta),
        m=orbit.m,
        n=orbit.n,
        N=orbit.N,
        eta=encode_array(np.asarray(orbit.eta, dtype=float)),
        segments=encode_array(np.asarray(orbit.segments, dtype=float)),
    )
    if report is not None:
        out["newton"] = report.to_dict()
    return out


def orbit_from_dict(d: dict) -> SegmentedOrbit:
    if d.get("kind") != "orbit":
        raise SchemaError(f"expected an orbit artifact, got {d.get('kind')!r}")
    return SegmentedOrbit(float(d["tau"]), decode_array(d["segments"]), decode_array(d["eta"]), float(d["delta"]))


def spectrum_to_dict(fd: FloquetData, spec: dict | None = None) -> dict:
    out = _header("spectrum", spec)
    out.update(
        base_index=fd.base_index,
        eps_c=fd.eps_c,
        counts=list(fd.counts),
        eigenvalues=encode_array(np.asarray(fd.eigenvalues, dtype=complex)),
        classes=[str(c) for c in fd.classes],
        mu=encode_array(np.asarray(fd.mu, dtype=complex)),
        lam=encode_array(np.asarray(fd.lam, dtype=complex)),
    )
    return out


def manifold_to_dict(P: ManifoldParam, spec: dict | None = None) -> dict:
    out = _header("manifold", spec)
    out.update(
        order=P.mis.order,
        n_u=P.n_u,
        coefficient_count=P.coefficient_count,
        tau=float(P.tau),
        lam=encode_array(np.asarray(P.lam, dtype=complex)),
        gamma=encode_array(np.asarray(P.gamma)),
        min_sigma=float(P.min_sigma),
        eta=encode_array(np.asarray(P.eta, dtype=complex)),
        p=encode_array(np.asarray(P.p, dtype=complex)),
        orbit=orbit_to_dict(P.orbit),
    )
    return out


def manifold_from_dict(d: dict) -> ManifoldParam:
    if d.get("kind") != "manifold":
        raise SchemaError(f"expected a manifold artifact, got {d.get('kind')!r}")
    mis = tc.multi_indices(int(d["n_u"]), int(d["order"]))
    return ManifoldParam(
        decode_array(d["p"]),
        decode_array(d["lam"]),
        decode_array(d["gamma"]),
        float(d["tau"]),
        mis,
        orbit_from_dict(d["orbit"]),
        decode_array(d["eta"]),
        float(d["min_sigma"]),
    )


def growth_to_dict(r: ReturnReport, ret: SegmentedOrbit | None, spec: dict | None = None) -> dict:
    out = _header("growth", spec)
    out.update(r.to_dict())
    if ret is not None:
        out["return_orbit"] = orbit_to_dict(ret)
    return out


def growth_from_dict(d: dict) -> tuple[ReturnReport, SegmentedOrbit | None]:
    if d.get("kind") != "growth":
        raise SchemaError(f"expected a growth artifact, got {d.get('kind')!r}")
    r = ReturnReport(
        int(d["k"]),
        int(d["j_star"]),
        float(d["phase"]),
        float(d["theta"]),
        float(d["sigma"]),
        float(d["distance"]),
        [float(v) for v in d["distances"]],
        int(d["iterations"]),
    )
    ret = orbit_from_dict(d["return_orbit"]) if "return_orbit" in d else None
    return r, ret


def homoclinic_to_dict(sol, spec: dict | None = None) -> dict:
    s = sol.state
    prob = sol.problem
    out = _header("homoclinic", spec)
    out.update(
        unknowns=sol.size,
        k=prob.k,
        j_star=prob.graph.j_star,
        stable_count=prob.graph.count,
        tau=encode_complex(s.tau),
        eta=encode_array(np.asarray(s.eta, dtype=complex)),
        lam=encode_array(s.lam),
        sigma=encode_array(s.sigma),
        delta=encode_array(s.delta),
        h=encode_array(s.h),
        y=encode_array(s.y),
        p=encode_array(s.p),
        gamma=encode_array(np.asarray(prob.gamma, dtype=complex)),
        diagnostics=dict(
            residual=sol.residual,
            h_l1=sol.h_norm,
            rcond=sol.rcond,
            delay_gap=sol.delay_gap,
            tau_return=prob.tau_return,
            imag_residue=sol.imag_residue,
            linear_solver=sol.solver,
            newton=sol.newton.to_dict(),
        ),
    )
    return out
