"""Command-line experiment driver.

A config is a JSON object with ``"schema": 1``.  Instances are given either
inline (``noise``, ``encoder``, ``d_A``, ``d_B`` at top level) or as a list
under ``instances``.  Example::

    {"schema": 1,
     "noise": {"kind": "erasure", "n_in": 3, "erased": [2]},
     "encoder": {"kind": "haar", "seed": 7},
     "d_A": 2, "d_B": 4,
     "deltas": [1e-3],
     "tasks": ["decode_gyk", "petz_exact"]}

Exit codes: 0 success, 2 invalid input, 3 cap exceeded, 4 a numerical
identity or bound failed.
"""

from __future__ import annotations

import argparse
import contextvars
import copy
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._config import get_tolerances, tolerance_context
from .analysis import complexity_report, crossover_sweep, unitary_cost_formula
from .corpus import erasure_sweep_specs, instance_from_spec, pauli_sweep_specs
from .decoders import barnum_knill_check, decode_gyk, decode_petzlike, petz_exact
from .decoupling import decoupling_epsilon, entropy_report
from .exceptions import DecoderError, ValidationError
from .protocols import gyk_problem, petzlike_problem, postselect, projector_identities
from .qsvt import CONVENTION_VERSION, _PHASE_CACHE, phase_cache_key, qsp_scalar_eval, sign_phases
from .tensor import reduced_density, trace_distance

__all__ = ["ExperimentConfig", "load_config", "run_experiment", "artifact_version", "dumps", "main"]

SCHEMA = 1
TASKS = ("postselect", "decode_gyk", "decode_petzlike", "petz_exact", "complexity", "sweep")
PRESETS = {
    "protocol": ["postselect"],
    "decode": ["decode_gyk", "decode_petzlike", "petz_exact"],
    "compare": ["complexity"],
    "sweep": ["sweep"],
}
INSTANCE_KEYS = ("noise", "encoder", "d_A", "d_B", "qubit", "name")
TOP_KEYS = {"schema", "instances", "deltas", "tasks", "cap", "tolerances", "output", "sweep", "jobs",
            "beta", "delta"} | set(INSTANCE_KEYS)
# identities are dense in the register dimension
IDENTITY_DIM_LIMIT = 2**11


def artifact_version() -> str:
    """``<version>+g<hash>``; the hash covers the package sources and the phase convention."""
    h = hashlib.sha256(CONVENTION_VERSION.encode())
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return f"{__version__}+g{h.hexdigest()[:10]}"


# --------------------------------------------------------------------------
# config


@dataclass
class ExperimentConfig:
    instances: list = field(default_factory=list)
    deltas: list = field(default_factory=lambda: [1e-3])
    tasks: list = field(default_factory=lambda: ["postselect"])
    cap: int | None = None
    tolerances: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    jobs: int = 1
    beta: float | None = None
    delta: float | None = None

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "instances": self.instances,
            "deltas": self.deltas,
            "tasks": self.tasks,
            "cap": self.cap,
            "tolerances": self.tolerances,
            "sweep": self.sweep,
        }


def _positive_float(x, path: str, upper: float = 1.0) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not (0 < x < upper or (x == upper == 1.0)):
        raise ValidationError(f"expected a number in (0, {upper}], got {x!r}", path)
    return float(x)


def parse_config(raw: dict, *, seed: int | None = None, cap: int | None = None, tasks=None,
                 jobs: int | None = None) -> ExperimentConfig:
    """Validate a raw config dict; CLI overrides win over config values."""
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object", "config")
    if raw.get("schema") != SCHEMA:
        raise ValidationError(f"expected schema {SCHEMA}, got {raw.get('schema')!r}", "schema")
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise ValidationError(f"unknown key(s) {unknown}", unknown[0])
    if "instances" in raw:
        if any(k in raw for k in ("noise", "encoder", "d_A")):
            raise ValidationError("give either 'instances' or one inline instance, not both", "instances")
        insts = raw["instances"]
        if not isinstance(insts, list):
            raise ValidationError("expected a list", "instances")
    elif "noise" in raw or "encoder" in raw or "d_A" in raw:
        insts = [{k: raw[k] for k in INSTANCE_KEYS if k in raw}]
    else:
        insts = []
    insts = copy.deepcopy(insts)
    if seed is not None:
        for spec in insts:
            if isinstance(spec, dict) and isinstance(spec.get("encoder"), dict) and spec["encoder"].get("kind") == "haar":
                spec["encoder"]["seed"] = seed
    cfg = ExperimentConfig(instances=insts)
    deltas = raw.get("deltas", [1e-3])
    if not isinstance(deltas, list) or not deltas:
        raise ValidationError("expected a non-empty list", "deltas")
    cfg.deltas = [_positive_float(d, f"deltas[{i}]") for i, d in enumerate(deltas)]
    t = tasks if tasks is not None else raw.get("tasks", ["postselect"])
    if not isinstance(t, list):
        raise ValidationError("expected a list", "tasks")
    for i, name in enumerate(t):
        if name not in TASKS:
            raise ValidationError(f"unknown task {name!r}; expected one of {TASKS}", f"tasks[{i}]")
    cfg.tasks = [name for name in TASKS if name in t]
    c = cap if cap is not None else raw.get("cap")
    if c is not None and (isinstance(c, bool) or not isinstance(c, int) or c < 1):
        raise ValidationError(f"expected a positive integer, got {c!r}", "cap")
    cfg.cap = c
    tol = raw.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ValidationError("expected an object", "tolerances")
    known = get_tolerances().as_dict()
    for k, v in tol.items():
        if k not in known:
            raise ValidationError(f"unknown tolerance {k!r}", f"tolerances.{k}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"expected a number, got {v!r}", f"tolerances.{k}")
    cfg.tolerances = dict(tol)
    cfg.output = dict(raw.get("output", {}))
    sw = raw.get("sweep", {})
    if not isinstance(sw, dict):
        raise ValidationError("expected an object", "sweep")
    if sw.get("family", "pauli") not in ("pauli", "erasure"):
        raise ValidationError(f"unknown sweep family {sw.get('family')!r}", "sweep.family")
    cfg.sweep = dict(sw)
    cfg.jobs = jobs if jobs is not None else int(raw.get("jobs", 1))
    if cfg.jobs < 1:
        raise ValidationError("expected at least one worker", "jobs")
    if "beta" in raw:
        cfg.beta = _positive_float(raw["beta"], "beta")
    if "delta" in raw:
        cfg.delta = _positive_float(raw["delta"], "delta")
    if not insts and any(task in cfg.tasks for task in TASKS[:5]):
        raise ValidationError("tasks need at least one instance", "instances")
    return cfg


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"no such file: {path}", "--config") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON ({exc})", "--config") from None
    return parse_config(raw, **overrides)


# --------------------------------------------------------------------------
# serialisation


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, no NaN."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_text(rows: list[dict]) -> str:
    cols = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in _clean(r).items()})
    return buf.getvalue()


# --------------------------------------------------------------------------
# tasks


def _postselect_block(inst, rows):
    g, p = gyk_problem(inst), petzlike_problem(inst)
    rg, rp = postselect(g), postselect(p)
    out = {"gyk": rg.as_dict(), "petzlike": rp.as_dict()}
    if not (rg.degenerate or rp.degenerate):
        out["equivalence_trace_distance"] = trace_distance(
            reduced_density(rg.post_state, ["R", "E", "E'", "R'"]),
            reduced_density(rp.post_state, ["R", "E", "E'", "R'"]),
        )
    for prob, res in ((g, rg), (p, rp)):
        if prob.dim <= IDENTITY_DIM_LIMIT:
            out[prob.kind]["projector_identities"] = projector_identities(prob)
        rows.append({"instance": inst.name, "task": "postselect", "kind": prob.kind, **res.as_dict()})
    return out


def _decoder_block(inst, cfg, rows):
    out = {}
    petz = None
    if "petz_exact" in cfg.tasks:
        petz = petz_exact(inst)
        out["petz_exact"] = petz.as_dict()
        rows.append({"instance": inst.name, "task": "petz_exact", "kind": "petz_exact", **petz.as_dict()})
    for task, fn, kind in (("decode_gyk", decode_gyk, "gyk"), ("decode_petzlike", decode_petzlike, "petzlike")):
        if task not in cfg.tasks:
            continue
        runs = []
        for delta in cfg.deltas:
            run = fn(inst, delta, cap=cfg.cap)
            d = run.as_dict()
            if petz is not None:
                holds, margin = barnum_knill_check(inst, run, petz)
                d["barnum_knill"] = {"holds": holds, "margin": margin}
            runs.append(d)
            rows.append({"instance": inst.name, "task": task, "kind": kind,
                         **{k: v for k, v in d.items() if k != "barnum_knill"}})
        out[task] = runs
    return out


def _instance_report(spec, cfg):
    rows: list[dict] = []
    inst = instance_from_spec(spec)
    rep = {"describe": inst.describe(), "epsilon": decoupling_epsilon(inst.omega),
           "entropies": entropy_report(inst.omega).as_dict()}
    if "postselect" in cfg.tasks:
        rep["postselect"] = _postselect_block(inst, rows)
    if any(t in cfg.tasks for t in ("decode_gyk", "decode_petzlike", "petz_exact")):
        rep["decoders"] = _decoder_block(inst, cfg, rows)
    if "complexity" in cfg.tasks:
        cr = []
        for delta in cfg.deltas:
            r = complexity_report(inst, delta)
            cr.append({**r.as_dict(), "unitary_cost": unitary_cost_formula(r)})
            rows.append({"instance": inst.name, "task": "complexity", "kind": "", **_without_name(r.as_dict())})
        rep["complexity"] = cr
    return rep, rows


def _without_name(d: dict) -> dict:
    return {k: v for k, v in d.items() if k != "name"}


def _sweep_specs(sw: dict) -> list[dict]:
    if sw.get("family", "pauli") == "pauli":
        kw = {k: sw[k] for k in ("ps", "ns", "seed") if k in sw}
        return pauli_sweep_specs(**kw)
    kw = {k: sw[k] for k in ("cases", "seed") if k in sw}
    return erasure_sweep_specs(**kw)


def _sweep_block(cfg, rows):
    specs = _sweep_specs(cfg.sweep)
    delta = float(cfg.sweep.get("delta", cfg.deltas[0]))
    check = bool(cfg.sweep.get("check", True))
    table = crossover_sweep([instance_from_spec(s) for s in specs], delta, cfg.sweep.get("degree_cap"), check)
    for r in table.rows:
        rows.append({"instance": r.name, "task": "sweep", "kind": "", **_without_name(r.as_dict())})
    return {
        "family": cfg.sweep.get("family", "pauli"),
        "delta": delta,
        "rows": [r.as_dict() for r in table.rows],
        "skipped": table.skipped,
        "strict_points": len(table.strict_rows),
        "strict_failures": [r.name for r in table.failures],
    }


def _qsp_block(beta: float, delta: float, cap=None) -> dict:
    poly, phases, relax = sign_phases(beta, delta, cap)
    xs = np.linspace(-1.0, 1.0, get_tolerances().phase_grid)
    dev = float(np.max(np.abs(qsp_scalar_eval(phases.array(), xs) - poly(xs))))
    return {
        "beta": beta,
        "delta": delta,
        "delta_used": delta * relax,
        "t": phases.t,
        "grid_residual": dev,
        "poly_grid_errors": poly.grid_errors(),
        "phases": phases.as_dict(),
        "phase_cache_key": phase_cache_key(beta, delta),
        "convention": CONVENTION_VERSION,
    }


def run_experiment(cfg: ExperimentConfig) -> tuple[dict, list[dict]]:
    """Execute the configured tasks; returns ``(report, csv_rows)``.

    Instances are processed on a thread pool of ``cfg.jobs`` workers; the
    report is assembled in config order so output does not depend on it.
    """
    overrides = dict(cfg.tolerances)
    if cfg.cap is not None:
        overrides["dim_cap"] = cfg.cap
    with tolerance_context(**overrides) as tol:
        inst_tasks = [t for t in cfg.tasks if t != "sweep"]
        results = []
        if inst_tasks:
            def work(spec):
                return _instance_report(spec, cfg)

            if cfg.jobs > 1 and len(cfg.instances) > 1:
                with ThreadPoolExecutor(cfg.jobs) as ex:
                    futs = [ex.submit(contextvars.copy_context().run, work, s) for s in cfg.instances]
                    results = [f.result() for f in futs]
            else:
                results = [work(s) for s in cfg.instances]
        rows = [r for _, rs in results for r in rs]
        report = {
            "schema": SCHEMA,
            "version": artifact_version(),
            "convention": CONVENTION_VERSION,
            "tolerances": tol.as_dict(),
            "config": cfg.as_dict(),
            "instances": [r for r, _ in results],
        }
        if "sweep" in cfg.tasks:
            report["sweep"] = _sweep_block(cfg, rows)
        if cfg.beta is not None:
            report["qsp"] = _qsp_block(cfg.beta, cfg.delta or cfg.deltas[0], tol.degree_cap)
    for row in rows:
        row.setdefault("version", report["version"])
    return report, rows


def _write_outputs(report, rows, out_dir: Path, output: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    jpath = out_dir / output.get("json", "report.json")
    jpath.write_text(dumps(report))
    paths = [jpath]
    if rows:
        cpath = out_dir / output.get("csv", "summary.csv")
        cpath.write_text(_csv_text(rows))
        paths.append(cpath)
    return paths


# --------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON, schema 1)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="override every Haar encoder seed")
    common.add_argument("--cap", type=int, help="dimension cap for any dense register")
    common.add_argument("--jobs", type=int, help="worker threads across instances")

    ap = argparse.ArgumentParser(prog="qsvt-decoders", description="Decoupling-based decoder experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the tasks listed in the config")
    sub.add_parser("protocol", parents=[common], help="post-selection formulas and identities")
    sub.add_parser("decode", parents=[common], help="both amplified decoders and the Petz map")
    q = sub.add_parser("qsp", parents=[common], help="sign polynomial and QSP phases")
    q.add_argument("--beta", type=float)
    q.add_argument("--delta", type=float)
    q.add_argument("--export-cache", metavar="PATH", help="write every cached phase set to PATH")
    c = sub.add_parser("compare", parents=[common], help="degree comparison per instance (default: Pauli grid)")
    c.add_argument("--family", choices=("pauli", "erasure"))
    s = sub.add_parser("sweep", parents=[common], help="crossover sweep with the strict-regime assertion")
    s.add_argument("--family", choices=("pauli", "erasure"))
    return ap


def _raw_config(args) -> dict:
    if args.config:
        try:
            return json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ValidationError(f"no such file: {args.config}", "--config") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON ({exc})", "--config") from None
    return {"schema": SCHEMA}


def _dispatch(args) -> ExperimentConfig:
    raw = _raw_config(args)
    if args.command == "run" and not args.config:
        raise ValidationError("'run' needs a config file", "--config")
    tasks = PRESETS.get(args.command)
    if args.command == "qsp":
        tasks = []
        if args.beta is not None:
            raw["beta"] = args.beta
        if args.delta is not None:
            raw["delta"] = args.delta
        if "beta" not in raw:
            raise ValidationError("a beta value is required", "--beta")
    if args.command in ("compare", "sweep"):
        has_inst = any(k in raw for k in ("instances", "noise"))
        if args.family:
            raw.setdefault("sweep", {})["family"] = args.family
        if args.command == "compare" and not has_inst:
            tasks = ["sweep"]
            raw.setdefault("sweep", {})["check"] = False
    return parse_config(raw, seed=args.seed, cap=args.cap, tasks=tasks, jobs=args.jobs)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _dispatch(args)
        report, rows = run_experiment(cfg)
        paths = _write_outputs(report, rows, Path(args.out), cfg.output)
        if args.command == "qsp" and args.export_cache:
            cache = {k: {"poly": p.as_dict(), "phases": ph.as_dict()} for k, (p, ph) in sorted(_PHASE_CACHE.items())}
            Path(args.export_cache).write_text(dumps({"convention": CONVENTION_VERSION, "cache": cache}))
            paths.append(Path(args.export_cache))
    except DecoderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
