"""Batch experiment driver.

``connection-lab <experiment> --config <path> [--output DIR] [--seed N] [--tolerance X]``

Each run writes ``report.json`` (config echo, results, assertions, overall
``passed`` flag and a ``timestamp``) plus CSV tables under ``tables/``, and,
depending on the experiment, field dumps under ``fields/`` and a per-iteration
``solver_log.jsonl``.  Exit codes: 0 all assertions passed, 1 an assertion
failed, 2 bad config (JSON syntax or schema), 3 I/O failure.
"""
from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import os
import re
import sys
from pathlib import Path

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from .copies import (
    ALL_COPIES,
    NOT_COPY_PAIR,
    ConstructionError,
    T_SAMPLES,
    LineFamily,
    classify_line,
    default_tolerance,
    identity_residuals,
    leibniz_residuals,
    line_curvature_closed_form,
    line_eval,
)
from .forms import Domain, l2_norm
from .gauge import curvature, relative_residual
from .io import dump_field, load_field, write_csv
from .lie_algebra import ConfigurationError, make_algebra
from .randomfields import make_rng, random_form
from .solver import ConvergenceError, SolverOptions, certified_directions, find_copy
from .witnesses import single_generator_pair, stabilizer_pair, vacuum_pair

EXPERIMENTS = (
    "validate_algebra",
    "verify_identities",
    "line_scan",
    "classify",
    "find_directions",
    "find_copy",
    "convergence",
)

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["algebra", "domain"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "algebra": {"enum": ["u1", "su2", "su3"]},
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim", "backend"],
            "properties": {
                "dim": {"enum": [2, 3, 4]},
                "backend": {"enum": ["grid", "polynomial"]},
                "n": {"type": "integer", "minimum": 4, "multipleOf": 2},
                "m": {"type": "integer", "minimum": 4},
                "box_length": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "instance": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["random", "single_generator", "vacuum", "stabilizer", "files"]},
                "scale": {"type": "number", "exclusiveMinimum": 0},
                "poly_degree": {"type": "integer", "minimum": 0, "maximum": 6},
                "n_modes": {"type": "integer", "minimum": 1},
                "max_wavenumber": {"type": "integer", "minimum": 1},
                "axis": {"type": "integer", "minimum": 0},
                "amplitude": {"type": "number"},
                "c": {"type": "number"},
                "commuting": {"type": "boolean"},
                "zero_base": {"type": "boolean"},
                "A_path": {"type": "string"},
                "K_path": {"type": "string"},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iterations": {"type": "integer", "minimum": 1},
                "residual_target": {"type": "number", "exclusiveMinimum": 0},
                "step_damping": {"type": "number", "exclusiveMinimum": 0},
                "singular_value_cutoff": {"type": "number", "exclusiveMinimum": 0},
                "cutoff_ratio": {"type": "number", "exclusiveMinimum": 0},
                "n_directions": {"type": "integer", "minimum": 1},
                "perturbation": {"type": "number", "minimum": 0},
            },
        },
        "t_values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "n_values": {
            "type": "array",
            "items": {"type": "integer", "minimum": 4, "multipleOf": 2},
            "minItems": 2,
        },
        "expect": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "verdict": {"enum": ["AllCopies", "EndpointsOnly", "NotCopyPair"]},
                "min_null_dimension": {"type": "integer", "minimum": 0},
                "min_order": {"type": "number"},
            },
        },
        "dump_fields": {"type": "boolean"},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string"},
    },
}

_DEFAULT_INSTANCE = {
    "validate_algebra": "random",
    "verify_identities": "random",
    "line_scan": "random",
    "classify": "single_generator",
    "find_directions": "random",
    "find_copy": "stabilizer",
    "convergence": "random",
}

_CSV_DOC = """\
CSV tables (17 significant digits):
  validate_algebra   tables/algebra.csv      check,value,tolerance,passed
  verify_identities  tables/identities.csv   identity,residual,tolerance,asserted,passed
  line_scan          tables/line_scan.csv    t,curvature_deviation,closed_form_residual
  classify           tables/line_scan.csv    (as above, over the fixed t samples)
  find_directions    tables/directions.csv   index,singular_value,field_residual,certified
  find_copy          tables/solver.csv       iter,residual,damping,step_norm,accepted
  convergence        tables/convergence.csv  n,h,bianchi,bianchi_abs,
                                             double_covariant_derivative,
                                             double_covariant_derivative_abs
"""


class ConfigError(Exception):
    """Invalid configuration; carries a ``line:col`` location when known."""


def _locate(text: str, error: jsonschema.ValidationError) -> tuple:
    """Best-effort line/column of the offending key in the raw config text."""
    key = None
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        allowed = set(error.schema.get("properties", {}))
        extra = sorted(set(error.instance) - allowed)
        key = extra[0] if extra else None
    if key is None:
        names = [p for p in error.path if isinstance(p, str)]
        key = names[-1] if names else None
    if key is None:
        return 1, 1
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return 1, 1
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return line, col


def load_config(path) -> dict:
    """Read and schema-validate a config file.  Raises ConfigError or OSError."""
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    validate_config(cfg, text, str(path))
    return cfg


def validate_config(cfg, text: str = "", where: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.path)))
    if errors:
        e = errors[0]
        line, col = _locate(text, e)
        loc = "/".join(map(str, e.path)) or "<root>"
        raise ConfigError(f"{where}:{line}:{col}: schema violation at {loc}: {e.message}")


def resolve_config(cfg: dict, experiment: str, seed=None, tolerance=None, output=None) -> dict:
    """Apply command-line overrides and fill defaults."""
    cfg = copy.deepcopy(cfg)
    if cfg.get("experiment", experiment) != experiment:
        raise ConfigError(
            f"config names experiment {cfg['experiment']!r} but {experiment!r} was requested"
        )
    cfg["experiment"] = experiment
    if seed is not None:
        cfg["seed"] = seed
    if tolerance is not None:
        cfg["tolerance"] = tolerance
    if output is not None:
        cfg["output_dir"] = output
    cfg.setdefault("seed", 0)
    cfg.setdefault("output_dir", "connection_lab_output")
    cfg.setdefault("instance", {"kind": _DEFAULT_INSTANCE[experiment]})
    cfg.setdefault("solver", {})
    cfg.setdefault("dump_fields", False)
    validate_config(cfg)
    return cfg


def _domain(cfg: dict, n=None) -> Domain:
    d = cfg["domain"]
    if d["backend"] == "grid":
        return Domain.grid(d["dim"], n or d.get("n", 16), d.get("box_length", 1.0))
    return Domain.polynomial(d["dim"], d.get("m", 4))


def _instance(cfg: dict, domain: Domain, rng):
    alg = make_algebra(cfg["algebra"])
    inst = cfg["instance"]
    kind = inst["kind"]
    if kind == "random":
        kw = {k: inst[k] for k in ("poly_degree", "n_modes", "max_wavenumber", "scale") if k in inst}
        A = random_form(domain, alg, 1, rng, **kw)
        K = random_form(domain, alg, 1, rng, **kw)
        if inst.get("zero_base", False):
            A = A * 0.0
        return A, K
    if kind == "single_generator":
        return single_generator_pair(domain, alg, inst.get("axis"), inst.get("amplitude", 1.0))
    if kind == "vacuum":
        return vacuum_pair(domain, alg, rng, inst.get("scale", 0.3), inst.get("axis"),
                           inst.get("commuting", True))
    if kind == "stabilizer":
        return stabilizer_pair(domain, alg, inst.get("c", 1.0), inst.get("axis", 2),
                               inst.get("amplitude", 1.0))
    if "A_path" not in inst or "K_path" not in inst:
        raise ConfigError("instance kind 'files' needs A_path and K_path")
    return load_field(inst["A_path"]), load_field(inst["K_path"])


def _solver_options(cfg: dict) -> SolverOptions:
    s = cfg["solver"]
    keys = ("max_iterations", "residual_target", "step_damping", "singular_value_cutoff", "cutoff_ratio")
    return SolverOptions(**{k: s[k] for k in keys if k in s})


def _check(assertions: list, name: str, value, tol, ok=None) -> None:
    if ok is None:
        ok = bool(value <= tol)
    assertions.append({"name": name, "value": value, "tolerance": tol, "passed": bool(ok)})


def _line_table(out: Path, L: LineFamily, ts) -> list:
    rows = []
    for t in ts:
        Ft = curvature(line_eval(L, t))
        dev = l2_norm(Ft - L.F) / L.scale
        closed = line_curvature_closed_form(L, t)
        res = relative_residual(Ft - closed, Ft, L.F, t * L.DK, t * t * L.KK)
        rows.append((float(t), dev, res))
    write_csv(out / "tables" / "line_scan.csv", ["t", "curvature_deviation", "closed_form_residual"], rows)
    return rows


# ---------------------------------------------------------------------------
# experiments: each returns (results, assertions)


def _exp_validate_algebra(cfg, out):
    alg = make_algebra(cfg["algebra"])
    tol = cfg.get("tolerance", 1e-13)
    checks = alg.validate(tol=np.inf)
    asserts = []
    for k, v in checks.items():
        _check(asserts, k, float(v), tol)
    write_csv(out / "tables" / "algebra.csv", ["check", "value", "tolerance", "passed"],
              [(a["name"], a["value"], tol, a["passed"]) for a in asserts])
    results = {"dimension": alg.dim, "rep_dim": alg.rep_dim, "abelian": alg.is_abelian,
               "checks": {k: float(v) for k, v in checks.items()}}
    return results, asserts


def _exp_verify_identities(cfg, out):
    dom = _domain(cfg)
    A, K = _instance(cfg, dom, make_rng(cfg["seed"]))
    tol = cfg.get("tolerance", 1e-12)
    res = identity_residuals(A, K)
    asserts, rows = [], []
    for k, v in res.items():
        # product-rule identities are only O(h^2) on the grid: reported, not asserted
        informational = k.endswith("_abs") or (
            dom.is_grid and k in ("bianchi", "double_covariant_derivative")
        )
        if informational:
            rows.append((k, v, tol, False, ""))
            continue
        _check(asserts, k, v, tol)
        rows.append((k, v, tol, True, v <= tol))
    write_csv(out / "tables" / "identities.csv",
              ["identity", "residual", "tolerance", "asserted", "passed"], rows)
    _maybe_dump(cfg, out, A=A, K=K)
    return {"residuals": res}, asserts


def _exp_line_scan(cfg, out):
    dom = _domain(cfg)
    A, K = _instance(cfg, dom, make_rng(cfg["seed"]))
    ts = cfg.get("t_values", list(T_SAMPLES))
    tol = cfg.get("tolerance", 1e-12)
    L = LineFamily(A, K)
    rows = _line_table(out, L, ts)
    asserts = []
    for t, _, r in rows:
        _check(asserts, f"line_curvature@{t!r}", r, tol)
    _maybe_dump(cfg, out, A=A, K=K)
    return {"t": [r[0] for r in rows], "curvature_deviation": [r[1] for r in rows],
            "closed_form_residual": [r[2] for r in rows]}, asserts


def _exp_classify(cfg, out):
    dom = _domain(cfg)
    A, K = _instance(cfg, dom, make_rng(cfg["seed"]))
    tol = cfg.get("tolerance", default_tolerance(dom))
    report = classify_line(A, K, tol, instance=dict(cfg["instance"]))
    ts = cfg.get("t_values", list(T_SAMPLES))
    rows = _line_table(out, LineFamily(A, K), ts)
    devs = [r[1] for r in rows]
    asserts = []
    if report.verdict != NOT_COPY_PAIR:
        _check(asserts, "midpoint_check", report.midpoint_check, tol)
        if report.verdict == ALL_COPIES:
            _check(asserts, "max_curvature_deviation", max(devs), tol)
        else:
            _check(asserts, "min_curvature_deviation", min(devs), tol, ok=min(devs) > tol)
        both = (report.dk_norm <= tol) == (report.kk_norm <= tol)
        _check(asserts, "degeneracy_flags_agree", float(not both), 0.0, ok=both)
    expected = cfg.get("expect", {}).get("verdict")
    if expected is not None:
        _check(asserts, "verdict", report.verdict, expected, ok=report.verdict == expected)
    _maybe_dump(cfg, out, A=A, K=K)
    return {"report": report.to_dict(), "curvature_deviation": devs}, asserts


def _exp_find_directions(cfg, out):
    dom = _domain(cfg)
    if not dom.is_grid:
        raise ConfigError("find_directions needs the grid backend")
    A, _ = _instance(cfg, dom, make_rng(cfg["seed"]))
    k = cfg["solver"].get("n_directions", 8)
    res = certified_directions(A, k, _solver_options(cfg))
    asserts = []
    cut = res["cutoff"]
    for i, (s, r, c) in enumerate(zip(res["singular_values"], res["residuals"], res["certified"])):
        if s <= cut:
            _check(asserts, f"direction_{i}_certified", float(r), float(cut), ok=bool(c))
    n_null = int(np.sum(res["certified"]))
    want = cfg.get("expect", {}).get("min_null_dimension")
    if want is not None:
        _check(asserts, "null_dimension", n_null, want, ok=n_null >= want)
    write_csv(out / "tables" / "directions.csv",
              ["index", "singular_value", "field_residual", "certified"],
              [(i, float(s), float(r), bool(c)) for i, (s, r, c) in
               enumerate(zip(res["singular_values"], res["residuals"], res["certified"]))])
    if cfg["dump_fields"]:
        for i, dvec in enumerate(res["directions"]):
            _dump(out, f"direction_{i}", dvec)
    return {
        "singular_values": [float(s) for s in res["singular_values"]],
        "field_residuals": [float(r) for r in res["residuals"]],
        "certified": [bool(c) for c in res["certified"]],
        "cutoff": float(cut),
        "sigma_max": float(res["sigma_max"]),
        "null_dimension": n_null,
    }, asserts


def _exp_find_copy(cfg, out):
    dom = _domain(cfg)
    if not dom.is_grid:
        raise ConfigError("find_copy needs the grid backend")
    rng = make_rng(cfg["seed"])
    A, K = _instance(cfg, dom, rng)
    eps = cfg["solver"].get("perturbation", 0.01)
    noise = random_form(dom, A.algebra, 1, rng)
    nn = l2_norm(noise)
    K0 = K + (eps * l2_norm(K) / nn) * noise if nn > 0 else K
    opts = _solver_options(cfg)
    log = []
    asserts = []
    try:
        Kf, report = find_copy(A, K0, opts, callback=log.append)
        converged = True
    except ConvergenceError as exc:
        Kf, report, converged = exc.result, None, False
        _check(asserts, "converged", exc.residual, opts.residual_target, ok=False)
    with open(out / "solver_log.jsonl", "w") as fh:
        for rec in log:
            fh.write(json.dumps(rec) + "\n")
    write_csv(out / "tables" / "solver.csv", ["iter", "residual", "damping", "step_norm", "accepted"],
              [(r["iter"], r["residual"], r["damping"], r["step_norm"], r["accepted"]) for r in log])
    if Kf is not None:
        _dump(out, "K", Kf)
    if cfg["dump_fields"]:
        _dump(out, "A", A)
        _dump(out, "K0", K0)
    results = {"converged": converged, "iterations": len(log), "perturbation": eps}
    if report is not None:
        results["report"] = report.to_dict()
        _check(asserts, "residual_copy", report.residual_copy, opts.residual_target)
        _check(asserts, "curvature_oracle", report.solver["curvature_oracle"],
               10 * opts.residual_target)
    return results, asserts


def fitted_order(h, r) -> float:
    """Least-squares slope of ``log r`` against ``log h``."""
    return float(np.polyfit(np.log(h), np.log(r), 1)[0])


def _exp_convergence(cfg, out):
    d = cfg["domain"]
    if d["backend"] != "grid" or d["dim"] < 3:
        raise ConfigError("convergence needs the grid backend with dim >= 3")
    ns = cfg.get("n_values", [8, 16, 32])
    rows = []
    for n in ns:
        dom = _domain(cfg, n)
        A, K = _instance(cfg, dom, make_rng(cfg["seed"]))
        r = leibniz_residuals(A, K)
        rows.append((n, dom.spacing, r["bianchi"], r["bianchi_abs"],
                     r["double_covariant_derivative"], r["double_covariant_derivative_abs"]))
    write_csv(out / "tables" / "convergence.csv",
              ["n", "h", "bianchi", "bianchi_abs", "double_covariant_derivative",
               "double_covariant_derivative_abs"], rows)
    h = [r[1] for r in rows]
    orders = {
        "bianchi": fitted_order(h, [r[2] for r in rows]),
        "bianchi_abs": fitted_order(h, [r[3] for r in rows]),
        "double_covariant_derivative": fitted_order(h, [r[4] for r in rows]),
        "double_covariant_derivative_abs": fitted_order(h, [r[5] for r in rows]),
    }
    want = cfg.get("expect", {}).get("min_order", 1.9)
    asserts = []
    for k in ("bianchi", "double_covariant_derivative"):
        _check(asserts, f"order_{k}", orders[k], want, ok=orders[k] >= want)
    return {"n": ns, "h": h, "orders": orders,
            "residuals": [dict(zip(["n", "h", "bianchi", "bianchi_abs", "double_covariant_derivative",
                                    "double_covariant_derivative_abs"], r)) for r in rows]}, asserts


_RUNNERS = {
    "validate_algebra": _exp_validate_algebra,
    "verify_identities": _exp_verify_identities,
    "line_scan": _exp_line_scan,
    "classify": _exp_classify,
    "find_directions": _exp_find_directions,
    "find_copy": _exp_find_copy,
    "convergence": _exp_convergence,
}


def _dump(out: Path, name: str, X) -> None:
    dump_field(X, out / "fields" / f"{name}.json")


def _maybe_dump(cfg, out, **fields) -> None:
    if cfg["dump_fields"]:
        for name, X in fields.items():
            _dump(out, name, X)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def run(cfg: dict) -> dict:
    """Run a resolved config and write its outputs; returns the report dict."""
    out = Path(cfg["output_dir"])
    (out / "tables").mkdir(parents=True, exist_ok=True)
    (out / "fields").mkdir(parents=True, exist_ok=True)
    results, asserts = _RUNNERS[cfg["experiment"]](cfg, out)
    report = {
        "experiment": cfg["experiment"],
        "config": cfg,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "results": results,
        "assertions": asserts,
        "passed": all(a["passed"] for a in asserts),
    }
    report = _jsonable(report)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="connection-lab",
        description="Curvature identities, copy classification and copy search for "
        "Lie-algebra-valued connections.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Config JSON schema (flags override config fields):\n"
        + json.dumps(CONFIG_SCHEMA, indent=2)
        + "\n\n" + _CSV_DOC
        + "\nEnvironment: CONNECTION_LAB_THREADS caps BLAS threads (default 1).\n"
        "Exit codes: 0 pass, 1 assertion failure, 2 config error, 3 I/O error.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="path to the JSON config")
    p.add_argument("--output", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="64-bit seed (overrides seed)")
    p.add_argument("--tolerance", type=float, help="assertion tolerance (overrides tolerance)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = int(os.environ.get("CONNECTION_LAB_THREADS", "1"))
    except ValueError:
        print("error: CONNECTION_LAB_THREADS must be an integer", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        cfg = resolve_config(cfg, args.experiment, args.seed, args.tolerance, args.output)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 3
    try:
        with threadpool_limits(limits=max(threads, 1)):
            report = run(cfg)
    except (ConfigError, ConfigurationError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return 3
    failed = [a["name"] for a in report["assertions"] if not a["passed"]]
    if failed:
        print(f"FAILED {cfg['experiment']}: " + ", ".join(failed), file=sys.stderr)
        return 1
    print(f"passed {cfg['experiment']}: {len(report['assertions'])} assertions "
          f"-> {Path(cfg['output_dir']) / 'report.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
