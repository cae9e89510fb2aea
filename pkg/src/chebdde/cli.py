"""Command-line pipeline: simulate, find-po, spectrum, manifold, grow, homoclinic, report.

Each stage reads the artifacts of earlier stages from ``--out`` and writes
its own there. Exit status is 0 on success, 1 when a solver fails and 2 for
bad input (missing artifacts, schema mismatch, bad configuration).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import chebseq as cs
from . import io
from .floquet import floquet_analysis
from .homoclinic import return_orbit, seed_homoclinic, solve_homoclinic, transversality_report
from .linsolve import NewtonError, SingularMatrixError
from .manifold import NoReturnError, OrbitShifter, ResonanceError, conjugacy_residual, grow_boundary, solve_manifold
from .models import ModelDomainError, lift_history
from .periodic import newton_periodic, orbit_from_samples
from .stepper import StepError, iterate, sample_segments

log = logging.getLogger("chebdde")

STAGES = ("simulate", "find-po", "spectrum", "manifold", "grow", "homoclinic", "report")

PRESETS = {
    "cubic_ikeda": dict(
        params={},
        tau0=1.565,
        m=8,
        delta=0.0,
        N=30,
        crossing=0,
        seed="ikeda_seed.csv",
        history=0.5,
        simulate_steps=200,
        max_steps=20,
    ),
    "mackey_glass": dict(
        params={"a": 1.0, "b": 2.0, "rho": 9.65},
        tau0=1.827,
        m=6,
        delta=1.0,
        N=45,
        crossing=2,
        seed="mackey_glass_seed.csv",
        history=1.2,
        simulate_steps=400,
        max_steps=50,
    ),
}
COMMON = dict(
    order=15,
    gamma=None,
    eps_c=1e-6,
    grow_tol=1e-5,
    distance_threshold=1e-8,
    rcond_threshold=1e-12,
    k=None,
    j_star=None,
    samples_per_step=32,
    linear_solver="auto",
)
ALIASES = {"ikeda": "cubic_ikeda"}

FAILURES = (NewtonError, NoReturnError, ResonanceError, SingularMatrixError, StepError, ModelDomainError)


class ConfigError(ValueError):
    pass


def load_config(model: str | None, path: str | None) -> dict:
    user = {}
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    name = model or user.get("model") or "cubic_ikeda"
    name = ALIASES.get(name, name)
    if name not in PRESETS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(PRESETS)}")
    cfg = dict(COMMON)
    cfg.update(PRESETS[name])
    unknown = sorted(set(user) - set(cfg) - {"model"})
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}")
    params = dict(cfg["params"])
    params.update(user.get("params", {}))
    cfg.update({k: v for k, v in user.items() if k not in ("params", "model")})
    cfg["params"] = params
    cfg["model"] = name
    for key in ("m", "N", "order", "max_steps"):
        if int(cfg[key]) < 1:
            raise ConfigError(f"{key} must be positive")
    for key in ("eps_c", "grow_tol", "distance_threshold", "rcond_threshold", "tau0"):
        if not float(cfg[key]) > 0:
            raise ConfigError(f"{key} must be positive")
    return cfg


class Pipeline:
    def __init__(self, cfg: dict, out: Path, seed_timeseries: str | None = None):
        self.cfg = cfg
        self.out = out
        self.seed_timeseries = seed_timeseries
        self.spec = io.model_spec(cfg["model"], cfg["params"])
        self.model = io.model_from_spec(self.spec)
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out / name

    def _seed_path(self):
        if self.seed_timeseries:
            return self.seed_timeseries
        return resources.files("chebdde").joinpath("data", self.cfg["seed"])

    # -- stages ------------------------------------------------------------

    def simulate(self):
        c = self.cfg
        hist = np.atleast_1d(np.asarray(c["history"], dtype=float))
        phi = np.zeros((self.model.n, c["N"] + 1))
        phi[:, 0] = lift_history(hist[:1], self.model)[:, 0]
        segs = iterate(phi, c["tau0"], self.model, c["N"], k=int(c["simulate_steps"]))
        t, v = sample_segments(segs, c["tau0"], int(c["samples_per_step"]))
        header = ["t"] + [f"u{i}" for i in range(self.model.n)]
        io.write_csv(self.path("trajectory.csv"), header, zip(t, *np.real(v)))
        return [self.path("trajectory.csv")]

    def find_po(self):
        c = self.cfg
        t, w = io.read_timeseries(self._seed_path())
        guess = orbit_from_samples(t, w, c["tau0"], c["m"], c["N"], self.model, c["delta"], crossing=int(c["crossing"]))
        orbit, rep = newton_periodic(guess, self.model, c["delta"])
        io.write_json(self.path("orbit.json"), io.orbit_to_dict(orbit, self.spec, rep))
        rows = []
        for j in range(orbit.m):
            for i in range(orbit.n):
                for k in range(orbit.N + 1):
                    rows.append((j + 1, i, k, abs(float(orbit.segments[j, i, k]))))
        io.write_csv(self.path("coefficients.csv"), ["segment", "component", "k", "abs_coefficient"], rows)
        log.info("periodic orbit: tau = %.17g after %d Newton steps", orbit.tau, rep.iterations)
        return [self.path("orbit.json"), self.path("coefficients.csv")]

    def _orbit(self):
        return io.orbit_from_dict(io.read_json(self.path("orbit.json"), "orbit"))

    def spectrum(self):
        orbit = self._orbit()
        fd = floquet_analysis(orbit, self.model, self.cfg["eps_c"])
        io.write_json(self.path("spectrum.json"), io.spectrum_to_dict(fd, self.spec))
        rows = [(z.real, z.imag, abs(z), c) for z, c in zip(fd.eigenvalues, fd.classes)]
        io.write_csv(self.path("spectrum.csv"), ["re", "im", "abs", "class"], rows)
        log.info("spectrum counts (unstable, center, stable) = %s", fd.counts)
        return [self.path("spectrum.json"), self.path("spectrum.csv")]

    def manifold(self):
        c = self.cfg
        orbit = self._orbit()
        stored = io.read_json(self.path("spectrum.json"), "spectrum")
        fd = floquet_analysis(orbit, self.model, float(stored["eps_c"]))
        if list(fd.counts) != list(stored["counts"]):
            raise io.SchemaError("spectrum.json does not match orbit.json; rerun the spectrum stage")
        gamma = None if c["gamma"] is None else np.atleast_1d(c["gamma"])
        P = solve_manifold(orbit, fd, gamma, int(c["order"]), self.model, auto_gamma=gamma is None)
        d = io.manifold_to_dict(P, self.spec)
        d["conjugacy_residual"] = conjugacy_residual(P, self.model, [-0.9, 0.5])
        io.write_json(self.path("manifold.json"), d)
        rows = []
        t = np.linspace(-1, 1, 33)
        for j in range(1, P.m + 1):
            for s in np.linspace(-1, 1, 21):
                vals = np.real(cs.eval_points(P.real_slice(j, s)[0], t))
                rows.extend((j, tt, s, v) for tt, v in zip(t, vals))
        io.write_csv(self.path("manifold_surface.csv"), ["segment", "t", "s", "value"], rows)
        log.info("manifold: %d coefficients, gamma = %s", P.coefficient_count, P.gamma)
        return [self.path("manifold.json"), self.path("manifold_surface.csv")]

    def _manifold(self):
        return io.manifold_from_dict(io.read_json(self.path("manifold.json"), "manifold"))

    def _grow(self, P, k=None):
        c = self.cfg
        max_steps = int(c["max_steps"]) if k is None else int(k)
        r = grow_boundary(P, self.model, max_steps, tol=float(c["grow_tol"]), k=k)
        ret = return_orbit(P.orbit, self.model, r.theta)
        return r, ret

    def grow(self):
        P = self._manifold()
        r, ret = self._grow(P, self.cfg["k"])
        io.write_json(self.path("growth.json"), io.growth_to_dict(r, ret, self.spec))
        first = r.k - len(r.distances) + 1
        io.write_csv(self.path("growth_distances.csv"), ["steps", "distance"], [(first + i, d) for i, d in enumerate(r.distances)])
        log.info("return after k = %d steps at piece j* = %d, phase %.17g", r.k, r.j_star, r.phase)
        return [self.path("growth.json"), self.path("growth_distances.csv")]

    def homoclinic(self):
        c = self.cfg
        P = self._manifold()
        k_cfg = c["k"]
        if self.path("growth.json").exists():
            r, ret = io.growth_from_dict(io.read_json(self.path("growth.json"), "growth"))
            if k_cfg is not None and int(k_cfg) != r.k:
                r, ret = self._grow(P, int(k_cfg))
        else:
            r, ret = self._grow(P, k_cfg)
        j_star = c["j_star"]
        if j_star is not None and int(j_star) != r.j_star:
            ret = None  # recut the return orbit for the requested piece label
        prob, seed = seed_homoclinic(P, self.model, r, j_star=j_star, ret=ret)
        sol = solve_homoclinic(prob, seed, linear_solver=c["linear_solver"])
        rep = transversality_report(sol, h_threshold=c["distance_threshold"], rcond_threshold=c["rcond_threshold"])
        io.write_json(self.path("homoclinic.json"), io.homoclinic_to_dict(sol, self.spec))
        rep_doc = {"schema_version": io.SCHEMA_VERSION, "kind": "transversality", **rep}
        io.write_json(self.path("transversality.json"), rep_doc)
        self.path("transversality.txt").write_text(_report_text(rep))
        shifter = OrbitShifter(ret if ret is not None else P.orbit)
        rows = []
        for i, y in enumerate(sol.state.y, start=1):
            rows.append((i, shifter.distance(np.real(y))[0], float(np.abs(np.imag(y)).max())))
        io.write_csv(self.path("homoclinic_distances.csv"), ["iterate", "distance_to_orbit", "max_imag_coefficient"], rows)
        if not rep["distance_pass"]:
            raise NewtonError(
                f"landing distance |h|_1 = {rep['h_l1']:.3e} exceeds {rep['h_threshold']:.1e}; "
                "the first-order stable graph is not trustworthy there",
                sol.newton,
            )
        return [self.path(n) for n in ("homoclinic.json", "transversality.json", "transversality.txt", "homoclinic_distances.csv")]

    def report(self):
        doc: dict = {"schema_version": io.SCHEMA_VERSION, "kind": "report", "model": self.spec}
        lines = [f"model {self.spec['name']} {self.spec['params']}"]
        if self.path("orbit.json").exists():
            o = io.read_json(self.path("orbit.json"), "orbit")
            doc["orbit"] = {"tau": o["tau"], "m": o["m"], "N": o["N"], "delta": o["delta"]}
            lines.append(f"periodic orbit: tau = {o['tau']:.17g} (m = {o['m']}, N = {o['N']})")
        if self.path("spectrum.json").exists():
            s = io.read_json(self.path("spectrum.json"), "spectrum")
            mu = io.decode_array(s["mu"])
            doc["spectrum"] = {"counts": s["counts"], "mu": [io.encode_complex(z) for z in mu]}
            lines.append(f"multipliers: counts {tuple(s['counts'])}, unstable {', '.join(f'{z.real:.17g}' for z in mu)}")
        if self.path("manifold.json").exists():
            mf = io.read_json(self.path("manifold.json"), "manifold")
            doc["manifold"] = {k: mf[k] for k in ("order", "coefficient_count", "min_sigma", "conjugacy_residual") if k in mf}
            lines.append(f"manifold: {mf['coefficient_count']} coefficients, order {mf['order']}")
        if self.path("growth.json").exists():
            g = io.read_json(self.path("growth.json"), "growth")
            doc["growth"] = {k: g[k] for k in ("k", "j_star", "phase", "distance", "iterations")}
            lines.append(f"growth: k = {g['k']}, j* = {g['j_star']}, phase = {g['phase']:.17g}, distance {g['distance']:.3e}")
        if self.path("transversality.json").exists():
            t = io.read_json(self.path("transversality.json"), "transversality")
            t.pop("schema_version")
            t.pop("kind")
            doc["homoclinic"] = t
            lines.append(_report_text(t).rstrip())
        io.write_json(self.path("report.json"), doc)
        self.path("report.txt").write_text("\n".join(lines) + "\n")
        return [self.path("report.json"), self.path("report.txt")]

    def run(self, stage: str):
        fn = {
            "simulate": self.simulate,
            "find-po": self.find_po,
            "spectrum": self.spectrum,
            "manifold": self.manifold,
            "grow": self.grow,
            "homoclinic": self.homoclinic,
            "report": self.report,
        }[stage]
        return fn()


def _report_text(rep: dict) -> str:
    return (
        f"homoclinic system: {rep['unknowns']} complex unknowns ({rep['linear_solver']} linear algebra),"
        f" k = {rep['k']}, j* = {rep['j_star']}, {rep['stable_count']} stable directions\n"
        f"residual: {rep['residual']:.3e} after {rep['newton_iterations']} Newton steps"
        f" (quadratic tail: {'yes' if rep['quadratic_tail'] else 'no'})\n"
        f"landing distance |h|_1: {rep['h_l1']:.3e} (threshold {rep['h_threshold']:.0e}:"
        f" {'pass' if rep['distance_pass'] else 'FAIL'})\n"
        f"delay: {rep['tau']:.17g} vs return orbit {rep['tau_return']:.17g} (gap {rep['delay_gap']:.3e})\n"
        f"imaginary residue of y: {rep['imag_residue']:.3e}\n"
        f"rcond: {rep['rcond']:.3e} -> {rep['transversality']}\n"
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chebdde", description=__doc__.splitlines()[0])
    ap.add_argument("stage_pos", nargs="?", metavar="stage", choices=STAGES + ("all",), help="pipeline stage (or 'all')")
    ap.add_argument("--stage", choices=STAGES + ("all",), help="same as the positional stage")
    ap.add_argument("--model", help="cubic_ikeda or mackey_glass (overrides the config)")
    ap.add_argument("--config", help="JSON file with overrides")
    ap.add_argument("--out", default="out", help="artifact directory (default: ./out)")
    ap.add_argument("--seed-timeseries", help="CSV (t, w) used by find-po instead of the shipped fixture")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 1), format="%(levelname)s %(name)s: %(message)s")
    stage = args.stage or args.stage_pos
    if stage is None:
        print("error: no stage given", file=sys.stderr)
        return 2
    if args.stage and args.stage_pos and args.stage != args.stage_pos:
        print("error: conflicting stages", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.model, args.config)
        pipe = Pipeline(cfg, Path(args.out), args.seed_timeseries)
        stages = STAGES[1:] if stage == "all" else (stage,)
        for s in stages:
            for p in pipe.run(s):
                print(p)
    except FAILURES as exc:
        print(f"error: {stage}: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, io.SchemaError, FileNotFoundError, KeyError) as exc:
        print(f"error: {stage}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
