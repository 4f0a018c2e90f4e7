"""
``dptol`` command line.

Subcommands::

    dptol fit DATA [--method dp|eb|mdp|wilks] [--a A] [--base FAMILY:P1,P2] ...
    dptol simulate CONFIG.toml [--out DIR] [--format markdown|csv|both]
    dptol potency [--report PATH]
    dptol replay MANIFEST.json

Exit codes: 0 success, 1 infeasible sample size (a fallback limit is still
reported), 2 input or configuration error, 3 numerical failure.
"""

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import (
    DPToleranceInterval,
    EmpiricalBayesToleranceInterval,
    MDPToleranceInterval,
    WilksToleranceInterval,
)
from .exceptions import ConfigError, ConvergenceError, DomainError, UndefinedPosteriorError
from .simulation import THREADS_ENV, emit_table, load_config, run_experiment

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

SPEC_BAND = (90.0, 110.0)


class InputError(Exception):
    """Bad data file or arguments; maps to exit code 2."""


# --------------------------------------------------------------------------- io


def read_values(path, column=None):
    """Read one value per line, or the named ``column`` of a CSV file.

    Blank lines and ``#`` comments are skipped. Errors name the line number.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    values = []
    if column is not None:
        lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
        reader = csv.DictReader(lines)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise InputError(f"{path}: no column named {column!r}")
        for lineno, row in enumerate(reader, start=2):
            cell = (row.get(column) or "").strip()
            if not cell:
                continue
            values.append(_number(cell, path, lineno))
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            s = line.split("#", 1)[0].strip()
            if s:
                values.append(_number(s, path, lineno))
    if not values:
        raise InputError(f"{path}: no numeric values found")
    return np.asarray(values, dtype=float)


def _number(s, path, lineno):
    try:
        v = float(s)
    except ValueError:
        raise InputError(f"{path}:{lineno}: cannot parse {s!r} as a number") from None
    if not math.isfinite(v):
        raise InputError(f"{path}:{lineno}: non-finite value {s!r}")
    return v


def file_digest(path):
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def bundled(kind, name):
    return resources.files("dptol").joinpath(kind, name)


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def make_manifest(command, params, seed=None, inputs=(), started=None):
    return {
        "command": command,
        "params": params,
        "seed": seed,
        "version": __version__,
        "started": started or _now(),
        "finished": _now(),
        "inputs": {str(p): file_digest(p) for p in inputs},
    }


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    return str(o)


def _f4(v):
    if v is None:
        return "--"
    return f"{v:.4f}"


# -------------------------------------------------------------------------- fit


def build_estimator(p):
    """Estimator from resolved ``fit`` parameters (a plain dict)."""
    common = {"beta": p["beta"], "side": p["side"]}
    if p["method"] == "wilks":
        return WilksToleranceInterval(gamma=p["gamma"], **common)
    common.update(gamma=p["gamma"], kind=p["kind"], q_split=p["q_split"])
    if p["method"] == "mdp":
        return MDPToleranceInterval(
            base_family=p["mdp_family"], mu0=p["mu0"], tau0=p["tau0"],
            a_a=p["a_a"], b_a=p["b_a"], iterations=p["iterations"], burnin=p["burnin"],
            random_state=p["seed"], convention=p["convention"], **common)
    extra = {"convention": p["convention"], "integration": p["integration"],
             "grid_step": p["grid_step"]}
    if p["method"] == "eb":
        return EmpiricalBayesToleranceInterval(
            a_schedule=p["schedule"], c=p["c"], base_family=p["family"],
            fit_mode=p["fit_mode"], **common, **extra)
    base = p["base"]
    if base is None and p["a"] > 0:
        raise InputError("--base is required when --a > 0")
    return DPToleranceInterval(a=p["a"], base=base, **common, **extra)


def run_fit(params, data_path, report=None, manifest=None, out=None):
    out = out or sys.stdout
    started = _now()
    x = read_values(data_path, params.get("column"))
    est = build_estimator(params)
    est.fit(x)
    iv = est.interval_
    print(f"n = {x.size}", file=out)
    print(f"interval = [{_f4(iv.lower)}, {_f4(iv.upper)}]", file=out)
    if not math.isnan(iv.achieved_level):
        print(f"achieved_level = {iv.achieved_level:.4f}", file=out)
    print(f"flags = {', '.join(sorted(iv.flags)) or 'none'}", file=out)
    man = make_manifest("fit", {**params, "data": str(data_path)}, params.get("seed"),
                        [data_path], started)
    if report:
        write_json(report, {"n": int(x.size), **iv.to_dict()})
    if manifest:
        write_json(manifest, man)
    else:
        print(json.dumps(man, sort_keys=True, default=_json_default), file=sys.stderr)
    if iv.infeasible:
        print("warning: sample too small for the requested content and level; "
              "the extreme order statistic is reported as a fallback", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


# --------------------------------------------------------------------- simulate


def run_simulate(params, out=None):
    out = out or sys.stdout
    started = _now()
    cfg = load_config(params["config"])
    if params.get("K") is not None:
        cfg.K = int(params["K"])
    rows = run_experiment(cfg, threads=params.get("threads"))
    md = emit_table(rows, "markdown")
    out.write(f"# {cfg.name}\n\n{md}")
    outdir = params.get("out")
    if outdir:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        fmt = params.get("format", "both")
        if fmt in ("markdown", "both"):
            (outdir / f"{cfg.name}.md").write_text(md)
        if fmt in ("csv", "both"):
            (outdir / f"{cfg.name}.csv").write_text(emit_table(rows, "csv"))
        man = make_manifest("simulate", params, cfg.master_seed, [params["config"]], started)
        write_json(outdir / f"{cfg.name}.manifest.json", man)
    return EXIT_OK


# ---------------------------------------------------------------------- potency

# (label, kind, estimator parameters)
POTENCY_ROWS = [
    ("DP(a=1, N(100, 3.3^2))", "content_gamma", {"a": 1, "base": "normal:100,3.3"}),
    ("DP(a=10, N(100, 3.3^2))", "content_gamma", {"a": 10, "base": "normal:100,3.3"}),
    ("DP(a=1, N(100, 5^2))", "content_gamma", {"a": 1, "base": "normal:100,5"}),
    ("DP(a=10, N(100, 5^2))", "content_gamma", {"a": 10, "base": "normal:100,5"}),
    ("MDP(a ~ Gamma(1,1), N(mu, s2))", "content_gamma", None),
    ("DP(a=5, N(100, 4.22^2))", "content_gamma", {"a": 5, "base": "normal:100,4.22"}),
    ("DP(a=5, Laplace(100, 2.9847))", "content_gamma", {"a": 5, "base": "laplace:100,2.9847"}),
    ("DP(a=5, 3.2696 t5 + 100)", "content_gamma", {"a": 5, "base": "t:100,3.2696,5"}),
    ("DP(a=10, N(100, 4.22^2))", "content_gamma", {"a": 10, "base": "normal:100,4.22"}),
    ("DP(a=10, Laplace(100, 2.9847))", "content_gamma", {"a": 10, "base": "laplace:100,2.9847"}),
    ("DP(a=10, 3.2696 t5 + 100)", "content_gamma", {"a": 10, "base": "t:100,3.2696,5"}),
    ("DP(a=0)", "expectation", {"a": 0, "base": None}),
    ("DP(a=1, N(100, 2^2))", "expectation", {"a": 1, "base": "normal:100,2"}),
    ("DP(a=10, N(100, 2^2))", "expectation", {"a": 10, "base": "normal:100,2"}),
    ("DP(a=1, N(100, 5^2))", "expectation", {"a": 1, "base": "normal:100,5"}),
    ("DP(a=10, N(100, 5^2))", "expectation", {"a": 10, "base": "normal:100,5"}),
    ("DP(a=5, N(100, 4.22^2))", "expectation", {"a": 5, "base": "normal:100,4.22"}),
    ("DP(a=5, Laplace(100, 2.9847))", "expectation", {"a": 5, "base": "laplace:100,2.9847"}),
    ("DP(a=5, 3.2696 t5 + 100)", "expectation", {"a": 5, "base": "t:100,3.2696,5"}),
    ("DP(a=10, N(100, 4.22^2))", "expectation", {"a": 10, "base": "normal:100,4.22"}),
    ("DP(a=10, Laplace(100, 2.9847))", "expectation", {"a": 10, "base": "laplace:100,2.9847"}),
    ("DP(a=10, 3.2696 t5 + 100)", "expectation", {"a": 10, "base": "t:100,3.2696,5"}),
]


def potency_data():
    return read_values(bundled("data", "potency.txt"))


def potency_mdp_estimator(seed=0):
    return MDPToleranceInterval(mu0=100.0, tau0=5.0, random_state=seed)


def potency_results(seed=0, integration="grid", grid_step=0.02):
    """List of ``(label, kind, interval)`` for the bundled potency sample."""
    x = potency_data()
    out = []
    for label, kind, p in POTENCY_ROWS:
        if p is None:
            est = potency_mdp_estimator(seed)
        elif kind == "expectation":
            est = DPToleranceInterval(kind="expectation", integration=integration,
                                      grid_step=grid_step, **p)
        else:
            est = DPToleranceInterval(**p)
        out.append((label, kind, est.fit(x).interval_))
    return out


def run_potency(params, out=None):
    out = out or sys.stdout
    started = _now()
    results = potency_results(params["seed"], params["integration"], params["grid_step"])
    lo_b, hi_b = SPEC_BAND
    titles = {
        "content_gamma": "Two-sided (0.95, 0.95) tolerance intervals "
                         "(Bonferroni: each side at content 0.975, level 0.975)",
        "expectation": "Two-sided 0.95-expectation tolerance intervals "
                       + ("(lattice sum, step %g)" % params["grid_step"]
                          if params["integration"] == "grid" else "(adaptive quadrature)"),
    }
    print(f"Relative potency, n = 25, specification band [{lo_b:g}, {hi_b:g}]", file=out)
    print("Normal-theory rows (Howe, Owen) are not computed by this package.", file=out)
    for kind in ("content_gamma", "expectation"):
        print(f"\n{titles[kind]}\n", file=out)
        print("| prior | lower | upper | within band |", file=out)
        print("|---|---:|---:|:---:|", file=out)
        for label, k, iv in results:
            if k != kind:
                continue
            ok = lo_b <= iv.lower and iv.upper <= hi_b
            print(f"| {label} | {_f4(iv.lower)} | {_f4(iv.upper)} | "
                  f"{'pass' if ok else 'outside'} |", file=out)
    if params.get("report"):
        write_json(params["report"], [
            {"prior": label, **iv.to_dict()} for label, _, iv in results])
    if params.get("manifest"):
        write_json(params["manifest"], make_manifest("potency", params, params["seed"],
                                                     [], started))
    return EXIT_OK


# ----------------------------------------------------------------------- parser


def _add_fit(sub):
    p = sub.add_parser("fit", help="tolerance interval for a data file")
    p.add_argument("data", help="text file (one value per line) or CSV with --column")
    p.add_argument("--column", help="CSV column holding the values")
    p.add_argument("--method", choices=("dp", "eb", "mdp", "wilks"), default="dp")
    p.add_argument("--a", type=float, default=1.0, help="DP concentration")
    p.add_argument("--base", help="base measure, e.g. normal:100,3.3")
    p.add_argument("--kind", choices=("bg", "content_gamma", "expectation"), default="bg")
    p.add_argument("--beta", type=float, default=0.95)
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--side", choices=("two", "two_sided", "upper", "lower"), default="two")
    p.add_argument("--q-split", type=float, default=0.5)
    p.add_argument("--convention", default="level_and_content_split",
                   choices=("level_and_content_split", "level_split"))
    p.add_argument("--integration", choices=("quadrature", "grid"), default="quadrature")
    p.add_argument("--grid-step", type=float, default=0.02)
    p.add_argument("--schedule", default="sqrt", help="eb: constant, linear or sqrt")
    p.add_argument("--c", type=float, default=2.0, help="eb: schedule multiplier")
    p.add_argument("--family", default="normal", help="eb: base family to fit")
    p.add_argument("--fit-mode", default="mle", help="eb: mle or moment_match")
    p.add_argument("--mdp-family", default="normal", choices=("normal", "laplace"))
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--tau0", type=float, default=10.0)
    p.add_argument("--a-a", type=float, default=1.0)
    p.add_argument("--b-a", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=5000)
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write a JSON report (full precision)")
    p.add_argument("--manifest", help="write the run manifest here instead of stderr")


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run a coverage experiment from a TOML config")
    p.add_argument("config", help="path, or the name of a bundled config")
    p.add_argument("--K", type=int, help="override the replication count")
    p.add_argument("--out", help="directory for tables and the manifest")
    p.add_argument("--format", choices=("markdown", "csv", "both"), default="both")
    p.add_argument("--threads", type=int,
                   help=f"worker processes (default ${THREADS_ENV} or all cores)")


def _add_potency(sub):
    p = sub.add_parser("potency", help="case study on the bundled potency sample")
    p.add_argument("--seed", type=int, default=0, help="MDP chain seed")
    p.add_argument("--integration", choices=("quadrature", "grid"), default="grid")
    p.add_argument("--grid-step", type=float, default=0.02)
    p.add_argument("--report", help="write a JSON report (full precision)")
    p.add_argument("--manifest", help="write the run manifest here")


def build_parser():
    parser = argparse.ArgumentParser(prog="dptol", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_fit(sub)
    _add_simulate(sub)
    _add_potency(sub)
    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    return parser


def _resolve_config(name):
    path = Path(name)
    if path.exists():
        return str(path)
    candidate = bundled("configs", name if name.endswith(".toml") else f"{name}.toml")
    if candidate.is_file():
        return str(candidate)
    raise InputError(f"config {name!r} not found")


def _dispatch(command, params):
    if command == "fit":
        data = params.pop("data")
        data = str(Path(data).resolve())
        return run_fit(params, data, params.pop("report", None), params.pop("manifest", None))
    if command == "simulate":
        params["config"] = _resolve_config(params["config"])
        if params.get("out"):
            params["out"] = str(Path(params["out"]).resolve())
        if params.get("threads") is None:
            env = os.environ.get(THREADS_ENV)
            params["threads"] = int(env) if env else (os.cpu_count() or 1)
        return run_simulate(params)
    if command == "potency":
        return run_potency(params)
    raise InputError(f"unknown command {command!r}")


def replay(manifest_path):
    try:
        man = json.loads(Path(manifest_path).read_text())
        command, params = man["command"], dict(man["params"])
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"unreadable manifest {manifest_path}: {exc}") from exc
    for path, digest in man.get("inputs", {}).items():
        if Path(path).exists() and file_digest(path) != digest:
            print(f"warning: {path} changed since the manifest was written", file=sys.stderr)
    if man.get("version") != __version__:
        print(f"warning: manifest written by version {man.get('version')}", file=sys.stderr)
    return _dispatch(command, params)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            return replay(args.manifest)
        params = {k: v for k, v in vars(args).items() if k != "command"}
        return _dispatch(args.command, params)
    except (InputError, ConfigError, DomainError, UndefinedPosteriorError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
