"""
Monte Carlo coverage experiments.

An experiment draws ``K`` samples of each size ``n`` from a data-generating
law, fits an estimator to each and records the true content of the fitted
interval. Replication ``k`` at size ``n`` always uses the stream
``rng_stream(master_seed, n, k)``, so results do not depend on the number
of workers or on the order in which replications finish.
"""

import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import clone

from .distributions import Distribution, parse_distribution
from .estimators import ESTIMATORS
from .exceptions import ConfigError, DomainError
from .rng import rng_stream

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "SummaryRow",
    "run_experiment",
    "summarize",
    "emit_table",
    "load_config",
    "config_from_dict",
    "resolve_threads",
    "COLUMNS",
]

THREADS_ENV = "DPTOL_THREADS"

COLUMNS = (
    "n",
    "K",
    "mean_coverage",
    "undercoverage_rate",
    "mean_lower",
    "mean_upper",
    "mean_length",
    "coverage_p2.5",
    "coverage_p97.5",
    "limit_p2.5",
    "limit_p97.5",
    "infeasible",
)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one coverage table."""

    name: str
    estimator: object
    dgp: Distribution
    n_values: tuple
    K: int = 1000
    master_seed: int = 0
    target: float = None

    def __post_init__(self):
        problems = []
        if not self.n_values or any(int(n) < 1 for n in self.n_values):
            problems.append("n_values must be a non-empty list of positive integers")
        if int(self.K) < 1:
            problems.append("K must be >= 1")
        if problems:
            raise ConfigError(problems)
        self.n_values = tuple(int(n) for n in self.n_values)
        self.K = int(self.K)
        if self.target is None:
            self.target = float(getattr(self.estimator, "beta", 0.95))


@dataclass
class SummaryRow:
    n: int
    K: int
    mean_coverage: float
    undercoverage_rate: float
    mean_lower: float
    mean_upper: float
    mean_length: float
    coverage_ci: tuple
    limit_ci: tuple
    infeasible: int
    extras: dict = field(default_factory=dict)

    def as_record(self):
        return {
            "n": self.n,
            "K": self.K,
            "mean_coverage": self.mean_coverage,
            "undercoverage_rate": self.undercoverage_rate,
            "mean_lower": self.mean_lower,
            "mean_upper": self.mean_upper,
            "mean_length": self.mean_length,
            "coverage_p2.5": self.coverage_ci[0],
            "coverage_p97.5": self.coverage_ci[1],
            "limit_p2.5": self.limit_ci[0],
            "limit_p97.5": self.limit_ci[1],
            "infeasible": self.infeasible,
        }


def resolve_threads(threads=None):
    """Worker count: explicit value, else ``$DPTOL_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise DomainError("threads must be >= 1")
    return threads


def _replicate(job):
    estimator, dgp, n, seed, k = job
    rng = rng_stream(seed, n, k)
    x = dgp.sample(rng, n)
    est = clone(estimator)
    if "random_state" in est.get_params():
        est.set_params(random_state=int(rng.integers(2**31 - 1)))
    est.fit(x)
    iv = est.interval_
    return est.coverage(dgp), iv.lower, iv.upper, iv.infeasible


def _mean(v):
    v = [x for x in v if math.isfinite(x)]
    if not v:
        return None
    return math.fsum(v) / len(v)


def _percentiles(v):
    v = np.asarray([x for x in v if math.isfinite(x)], dtype=float)
    if not v.size:
        return (None, None)
    lo, hi = np.percentile(v, [2.5, 97.5])  # linear interpolation (type 7)
    return (float(lo), float(hi))


def summarize(n, results, target):
    """Aggregate replication tuples ``(cp, lower, upper, infeasible)``."""
    cp = [r[0] for r in results]
    lo = [r[1] for r in results]
    up = [r[2] for r in results]
    length = [u - l for l, u in zip(lo, up)]
    infeasible = sum(bool(r[3]) for r in results)
    if all(math.isinf(x) for x in lo):
        limit = up
    elif all(math.isinf(x) for x in up):
        limit = lo
    else:
        limit = length
    return SummaryRow(
        n=n,
        K=len(results),
        mean_coverage=math.fsum(cp) / len(cp),
        undercoverage_rate=sum(c < target for c in cp) / len(cp),
        mean_lower=_mean(lo),
        mean_upper=_mean(up),
        mean_length=_mean(length),
        coverage_ci=_percentiles(cp),
        limit_ci=_percentiles(limit),
        infeasible=infeasible,
    )


def run_experiment(config, threads=None, progress=None):
    """Run every ``n`` in ``config`` and return a list of :class:`SummaryRow`."""
    threads = resolve_threads(threads)
    rows = []
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for n in config.n_values:
            jobs = [(config.estimator, config.dgp, n, config.master_seed, k)
                    for k in range(config.K)]
            if pool is None:
                results = [_replicate(j) for j in jobs]
            else:
                chunk = max(1, config.K // (4 * threads))
                results = list(pool.map(_replicate, jobs, chunksize=chunk))
            rows.append(summarize(n, results, config.target))
            if progress is not None:
                progress(rows[-1])
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def _fmt(v):
    if v is None:
        return "--"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.4f}"


def _cells(row):
    rec = row.as_record()
    all_bad = row.infeasible == row.K
    out = []
    for col in COLUMNS:
        v = rec[col]
        if all_bad and col not in ("n", "K", "infeasible"):
            v = None
        out.append(_fmt(v))
    return out


def emit_table(rows, fmt="markdown"):
    """Render rows as ``markdown`` or ``csv`` with four decimals.

    Metrics of a row whose every replication was infeasible print as ``--``.
    """
    body = [_cells(r) for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        w.writerows(body)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| " + " | ".join(COLUMNS) + " |",
                 "|" + "|".join("---:" for _ in COLUMNS) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in body]
        return "\n".join(lines) + "\n"
    raise DomainError(f"unknown table format {fmt!r}")


def config_from_dict(doc):
    """Build an :class:`ExperimentConfig`, collecting every problem found."""
    problems = []
    for key in ("name", "dgp", "n_values", "K", "master_seed", "method"):
        if key not in doc:
            problems.append(f"missing field {key!r}")
    known = {"name", "dgp", "n_values", "K", "master_seed", "method", "target", "description"}
    problems += [f"unknown field {k!r}" for k in sorted(set(doc) - known)]

    dgp = None
    if "dgp" in doc:
        try:
            dgp = parse_distribution(doc["dgp"])
        except (DomainError, ValueError, TypeError) as exc:
            problems.append(f"dgp: {exc}")

    for key in ("K", "master_seed"):
        if key in doc and not (isinstance(doc[key], int) and doc[key] >= (1 if key == "K" else 0)):
            problems.append(f"{key} must be a {'positive' if key == 'K' else 'non-negative'} integer")
    if "n_values" in doc:
        nv = doc["n_values"]
        if not (isinstance(nv, list) and nv and all(isinstance(n, int) and n >= 1 for n in nv)):
            problems.append("n_values must be a non-empty list of positive integers")

    estimator = None
    method = doc.get("method")
    if method is not None:
        if not isinstance(method, dict) or "estimator" not in method:
            problems.append("method.estimator is required")
        elif method["estimator"] not in ESTIMATORS:
            problems.append(f"method.estimator must be one of {sorted(ESTIMATORS)}")
        else:
            cls = ESTIMATORS[method["estimator"]]
            params = dict(method.get("params", {}))
            allowed = set(cls().get_params())
            bad = sorted(set(params) - allowed)
            problems += [f"method.params: unknown parameter {p!r}" for p in bad]
            for p in bad:
                params.pop(p)
            estimator = cls(**params)
            problems += [f"method.params: {m}" for m in _check_estimator(estimator)]

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        name=doc["name"],
        estimator=estimator,
        dgp=dgp,
        n_values=tuple(doc["n_values"]),
        K=doc["K"],
        master_seed=doc["master_seed"],
        target=doc.get("target"),
    )


def _check_estimator(est):
    # validate by building the same objects ``fit`` would build
    checks = [getattr(est, name) for name in ("_spec", "_plan", "_config") if hasattr(est, name)]
    if hasattr(est, "base") and getattr(est, "_plan", None) is None and est.base is not None:
        checks.append(lambda: parse_distribution(est.base))
    out = []
    for check in checks:
        try:
            check()
        except (DomainError, ValueError, TypeError) as exc:
            out.extend(str(exc).split("; "))
    return out


def load_config(path):
    """Read and validate a TOML experiment file."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return config_from_dict(doc)


def rows_to_dicts(rows):
    return [asdict(r) for r in rows]
