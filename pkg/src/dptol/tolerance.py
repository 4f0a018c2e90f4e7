"""
Tolerance intervals from a DP posterior, plus order-statistic baselines.

Two kinds are supported. ``content_gamma`` limits satisfy
``P(content >= beta | X) >= gamma`` and come from inverting the
quantile-process CDF. ``expectation`` limits are posterior means of the
quantile process at two content points ``beta`` apart.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .distributions import parse_distribution
from .exceptions import DomainError, InvertedIntervalError
from .quantile import QuantileProcess, expected_quantile

__all__ = [
    "SIDES",
    "KINDS",
    "CONVENTIONS",
    "ToleranceSpec",
    "ToleranceInterval",
    "one_sided_upper_bg",
    "one_sided_lower_bg",
    "two_sided_bg_bonferroni",
    "expectation_interval",
    "tolerance_interval",
    "dp_a0_index",
    "dp_a0_exact_index",
    "wilks_upper",
    "wilks_lower",
    "min_feasible_n",
    "coverage_probability",
]

SIDES = ("lower", "upper", "two_sided")
KINDS = ("content_gamma", "expectation")
CONVENTIONS = ("level_and_content_split", "level_split")

_SIDE_ALIASES = {"two": "two_sided", "both": "two_sided", "two-sided": "two_sided"}
_KIND_ALIASES = {"bg": "content_gamma", "beta_gamma": "content_gamma", "exp": "expectation"}


def _unit_open(name, v):
    if not 0.0 < v < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {v!r}")


@dataclass(frozen=True)
class ToleranceSpec:
    """Requested content, credibility, sidedness and interval kind."""

    beta: float = 0.95
    gamma: float = 0.95
    side: str = "two_sided"
    kind: str = "content_gamma"
    q_split: float = 0.5
    convention: str = "level_and_content_split"

    def __post_init__(self):
        side = _SIDE_ALIASES.get(self.side, self.side)
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "kind", kind)
        _unit_open("beta", self.beta)
        if kind == "content_gamma":
            _unit_open("gamma", self.gamma)
        if side not in SIDES:
            raise DomainError(f"side must be one of {SIDES}")
        if kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}")
        if not 0.0 <= self.q_split <= 1.0:
            raise DomainError("q_split must lie in [0, 1]")
        if self.convention not in CONVENTIONS:
            raise DomainError(f"convention must be one of {CONVENTIONS}")


@dataclass(frozen=True)
class ToleranceInterval:
    """Interval limits with diagnostics.

    ``achieved_level`` is the posterior probability attained at the returned
    limits (for two-sided intervals, the Bonferroni lower bound).
    """

    lower: float = -math.inf
    upper: float = math.inf
    achieved_level: float = float("nan")
    flags: frozenset = frozenset()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.lower > self.upper:
            raise InvertedIntervalError(self.lower, self.upper)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def length(self):
        return self.upper - self.lower

    @property
    def infeasible(self):
        return "infeasible_small_n" in self.flags

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lower) & (x <= self.upper)

    def to_dict(self):
        return {
            "lower": self.lower,
            "upper": self.upper,
            "achieved_level": self.achieved_level,
            "flags": sorted(self.flags),
            **self.meta,
        }


def _process(source):
    if isinstance(source, QuantileProcess):
        return source
    return source.quantile_process()


def _upper_limit(proc, beta, gamma):
    c = proc.first_crossing(beta, gamma)
    flags = set()
    if c.at_data_point:
        flags.add("at_data_point")
    if c.infeasible:
        flags.add("infeasible_small_n")
    return c.x, c.value, flags


def _lower_limit(proc, beta, gamma):
    # largest x with H_{1-beta}(x) <= 1-gamma, i.e. the first x where it exceeds
    c = proc.first_crossing(1.0 - beta, 1.0 - gamma, strict=True)
    achieved = 1.0 - float(proc.cdf_left(1.0 - beta, c.x)[0])
    flags = set()
    if c.at_data_point:
        flags.add("at_data_point")
    if c.infeasible:
        flags.add("infeasible_small_n")
    return c.x, achieved, flags


def one_sided_upper_bg(dp, beta, gamma):
    """``(-inf, U]`` with ``P(F(U) >= beta | X) >= gamma``."""
    _unit_open("beta", beta)
    _unit_open("gamma", gamma)
    u, lvl, flags = _upper_limit(_process(dp), beta, gamma)
    meta = {"kind": "content_gamma", "side": "upper", "beta": beta, "gamma": gamma}
    return ToleranceInterval(-math.inf, u, lvl, flags, meta)


def one_sided_lower_bg(dp, beta, gamma):
    """``[L, inf)`` with ``P(1 - F(L-) >= beta | X) >= gamma``."""
    _unit_open("beta", beta)
    _unit_open("gamma", gamma)
    lo, lvl, flags = _lower_limit(_process(dp), beta, gamma)
    meta = {"kind": "content_gamma", "side": "lower", "beta": beta, "gamma": gamma}
    return ToleranceInterval(lo, math.inf, lvl, flags, meta)


def bonferroni_levels(beta, gamma, convention):
    """Per-side (content, level) for a two-sided Bonferroni construction."""
    level = 1.0 - (1.0 - gamma) / 2.0
    if convention == "level_and_content_split":
        return (1.0 + beta) / 2.0, level
    if convention == "level_split":
        return beta, level
    raise DomainError(f"convention must be one of {CONVENTIONS}")


def two_sided_bg_bonferroni(dp, beta, gamma, convention="level_and_content_split"):
    """Intersect one-sided limits with Bonferroni-adjusted settings.

    ``level_and_content_split`` runs each side at content ``(1+beta)/2`` and
    level ``1-(1-gamma)/2`` so that joint content ``>= beta`` holds with
    credibility ``>= gamma``; ``level_split`` keeps content ``beta``.
    """
    _unit_open("beta", beta)
    _unit_open("gamma", gamma)
    side_beta, side_level = bonferroni_levels(beta, gamma, convention)
    proc = _process(dp)
    lo, lvl_lo, f_lo = _lower_limit(proc, side_beta, side_level)
    up, lvl_up, f_up = _upper_limit(proc, side_beta, side_level)
    if lo > up:
        raise InvertedIntervalError(lo, up)
    meta = {
        "kind": "content_gamma",
        "side": "two_sided",
        "beta": beta,
        "gamma": gamma,
        "convention": convention,
        "side_content": side_beta,
        "side_level": side_level,
        "lower_level": lvl_lo,
        "upper_level": lvl_up,
    }
    achieved = max(0.0, lvl_lo + lvl_up - 1.0)
    return ToleranceInterval(lo, up, achieved, f_lo | f_up, meta)


def expectation_interval(
    dp, beta, side="two_sided", q_split=0.5, method="quadrature", step=0.02
):
    """Limits at posterior means of the quantile process.

    Two-sided uses ``[E Q(q1), E Q(q1 + beta)]`` with ``q1 = q_split (1 - beta)``.
    """
    _unit_open("beta", beta)
    side = _SIDE_ALIASES.get(side, side)
    if side == "two_sided":
        q1 = q_split * (1.0 - beta)
        qs = (q1, q1 + beta)
    elif side == "upper":
        qs = (None, beta)
    elif side == "lower":
        qs = (1.0 - beta, None)
    else:
        raise DomainError(f"side must be one of {SIDES}")
    lims = []
    for q in qs:
        if q is None:
            lims.append(None)
        elif dp.a > 0 and q <= 0.0:
            lims.append(-math.inf)
        elif dp.a > 0 and q >= 1.0:
            lims.append(math.inf)
        else:
            lims.append(expected_quantile(dp, min(max(q, 0.0), 1.0), method=method, step=step))
    lo = -math.inf if lims[0] is None else lims[0]
    up = math.inf if lims[1] is None else lims[1]
    meta = {"kind": "expectation", "side": side, "beta": beta, "q_split": q_split}
    if method != "quadrature":
        meta["integration"] = f"{method}:{step}"
    return ToleranceInterval(lo, up, float("nan"), frozenset(), meta)


def tolerance_interval(dp, spec, **kwargs):
    """Dispatch on a :class:`ToleranceSpec`."""
    if spec.kind == "expectation":
        return expectation_interval(dp, spec.beta, spec.side, spec.q_split, **kwargs)
    if spec.side == "upper":
        return one_sided_upper_bg(dp, spec.beta, spec.gamma)
    if spec.side == "lower":
        return one_sided_lower_bg(dp, spec.beta, spec.gamma)
    return two_sided_bg_bonferroni(dp, spec.beta, spec.gamma, spec.convention)


_TIE_TOL = 1e-12


def _exact_binom_cdf_at_least(k, n, p, gamma):
    """Exact test of ``P(Bin(n, p) <= k) >= gamma`` for the binary values of p, gamma."""
    p, g = Fraction(p), Fraction(gamma)
    a, d = p.numerator, p.denominator
    b = d - a
    # sum_j C(n, j) a^j b^(n-j) over d^n, compared in integers
    term = b**n
    total = term
    for j in range(1, k + 1):
        term = term * (n - j + 1) * a // (j * b)
        total += term
    return total * g.denominator >= g.numerator * d**n


def _first_cdf_at_least(ks, n, p, gamma):
    """Index of the first ``k`` in ``ks`` with ``P(Bin(n, p) <= k) >= gamma``.

    Floating-point CDF values within ``1e-12`` of ``gamma`` are re-checked
    exactly, so ties such as ``P(Bin(2r+1, 1/2) <= r) = 1/2`` are resolved
    correctly. Returns ``None`` if no ``k`` qualifies.
    """
    cdf = stats.binom.cdf(ks, n, p)
    near = np.abs(cdf - gamma) <= _TIE_TOL
    ok = cdf >= gamma
    for i in np.flatnonzero(near):
        ok[i] = _exact_binom_cdf_at_least(int(ks[i]), n, p, gamma)
    hit = np.flatnonzero(ok)
    return int(hit[0]) if hit.size else None


def dp_a0_index(n, beta, gamma):
    """Smallest ``m`` in ``1..n`` with ``P(W <= m) >= gamma``, ``W ~ Bin(n+1, beta)``.

    Returns ``None`` when no such ``m`` exists.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    m = np.arange(1, n + 1)
    i = _first_cdf_at_least(m, n + 1, beta, gamma)
    return None if i is None else int(m[i])


def dp_a0_exact_index(n, beta, gamma):
    """Rank selected by inverting the ``a = 0`` posterior quantile process.

    Smallest ``m`` in ``1..n-1`` with ``1 - I_beta(m, n - m) >= gamma``;
    ``None`` if only the sample maximum (a degenerate point mass) qualifies.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1:
        return None
    m = np.arange(1, n)
    # 1 - I_beta(m, n - m) = P(Bin(n - 1, beta) <= m - 1)
    i = _first_cdf_at_least(m - 1, n - 1, beta, gamma)
    return None if i is None else int(m[i])


def wilks_upper(data, beta, gamma):
    """Frequentist order-statistic upper limit.

    Returns ``(m, limit, infeasible)`` where ``m`` is the smallest rank with
    ``P(W <= m - 1) >= gamma`` for ``W ~ Bin(n, beta)``; if none exists the
    sample maximum is returned with ``infeasible=True``.
    """
    x = np.sort(np.asarray(getattr(data, "sorted_values", data), dtype=float))
    n = x.size
    if n < 1:
        raise DomainError("n must be >= 1")
    m = np.arange(1, n + 1)
    i = _first_cdf_at_least(m - 1, n, beta, gamma)
    if i is None:
        return n, float(x[-1]), True
    k = int(m[i])
    return k, float(x[k - 1]), False


def wilks_lower(data, beta, gamma):
    """Mirror of :func:`wilks_upper`: returns ``(rank, limit, infeasible)``."""
    x = np.sort(np.asarray(getattr(data, "sorted_values", data), dtype=float))
    k, _, infeasible = wilks_upper(-x[::-1], beta, gamma)
    rank = x.size + 1 - k
    return rank, float(x[rank - 1]), infeasible


def min_feasible_n(beta, gamma, method="frequentist"):
    """Smallest ``n`` with ``n >= log(1-gamma)/log(beta)`` (+1 for the DP rule)."""
    _unit_open("beta", beta)
    _unit_open("gamma", gamma)
    bound = math.log1p(-gamma) / math.log(beta)
    if method == "dp_a0_rule_of_thumb":
        bound += 1.0
    elif method != "frequentist":
        raise DomainError("method must be 'frequentist' or 'dp_a0_rule_of_thumb'")
    # guard against bound landing a hair above an integer through rounding
    return max(1, math.ceil(bound - 1e-12))


def coverage_probability(interval, true_dist):
    """``F(upper) - F(lower)`` under the true law, with ``F(+-inf) = 1, 0``.

    ``true_dist`` may be a :class:`Distribution` or a string such as ``"normal:0,2"``.
    """
    if isinstance(true_dist, str):
        true_dist = parse_distribution(true_dist)
    lo = 0.0 if interval.lower == -math.inf else float(true_dist.cdf(interval.lower))
    up = 1.0 if interval.upper == math.inf else float(true_dist.cdf(interval.upper))
    return up - lo
