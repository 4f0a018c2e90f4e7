"""Data-driven choice of the DP concentration and base measure."""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution
from .exceptions import DomainError

__all__ = ["ElicitationPlan", "elicit_a", "fit_base", "SCHEDULES", "FIT_MODES"]

SCHEDULES = ("constant", "linear", "sqrt")
FIT_MODES = ("mle", "moment_match", "fixed")
_FIT_FAMILIES = ("normal", "laplace", "t")


@dataclass(frozen=True)
class ElicitationPlan:
    """How to set ``a`` and ``F0`` from a sample.

    ``a_schedule`` is ``constant`` (``c``), ``linear`` (``c * n``) or
    ``sqrt`` (``c * sqrt(n)``). ``fit_mode="fixed"`` uses ``base`` as given.
    ``ddof`` sets the standard-deviation denominator ``n - ddof``.
    """

    a_schedule: str = "sqrt"
    c: float = 2.0
    base_family: str = "normal"
    fit_mode: str = "mle"
    fixed_location: float = None
    df: float = 5.0
    ddof: int = 0
    base: Distribution = None

    def __post_init__(self):
        problems = []
        if self.a_schedule not in SCHEDULES:
            problems.append(f"a_schedule must be one of {SCHEDULES}, got {self.a_schedule!r}")
        if not self.c > 0:
            problems.append("c must be > 0")
        if self.fit_mode not in FIT_MODES:
            problems.append(f"fit_mode must be one of {FIT_MODES}, got {self.fit_mode!r}")
        elif self.fit_mode == "fixed":
            if self.base is None:
                problems.append("fit_mode='fixed' needs a base distribution")
        elif self.base_family not in _FIT_FAMILIES:
            problems.append(f"base_family must be one of {_FIT_FAMILIES} for fitting")
        if self.base_family == "t" and self.fit_mode == "moment_match" and not self.df > 2:
            problems.append("t moment matching needs df > 2")
        if self.ddof not in (0, 1):
            problems.append("ddof must be 0 or 1")
        if problems:
            raise DomainError("; ".join(problems))


def elicit_a(plan, n):
    """Concentration for sample size ``n``.

    >>> elicit_a(ElicitationPlan("sqrt", 2.0), 25)
    10.0
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if plan.a_schedule == "constant":
        return float(plan.c)
    if plan.a_schedule == "linear":
        return float(plan.c * n)
    return float(plan.c * math.sqrt(n))


def fit_base(plan, data):
    """Fit the base measure to ``data`` according to ``plan``.

    Normal MLE is ``(mean, sd)``; Laplace MLE is ``(median, mean |x - median|)``.
    Moment matching sets the family's variance to the sample variance and
    places it at ``fixed_location`` when given (else the sample mean).
    """
    if plan.fit_mode == "fixed":
        return plan.base
    x = np.asarray(getattr(data, "sorted_values", data), dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need n >= 2 to estimate a scale")
    sd = float(np.std(x, ddof=plan.ddof))
    if not sd > 0:
        raise DomainError("degenerate sample: zero variance")
    fam = plan.base_family

    if plan.fit_mode == "mle":
        if fam == "normal":
            loc = float(np.mean(x))
            scale = sd
        elif fam == "laplace":
            loc = float(np.median(x))
            scale = float(np.mean(np.abs(x - loc)))
        else:
            # t has no closed-form MLE; fall back to the moment match
            loc = float(np.mean(x))
            scale = sd * math.sqrt((plan.df - 2.0) / plan.df)
        if plan.fixed_location is not None:
            loc = float(plan.fixed_location)
    else:
        loc = float(np.mean(x)) if plan.fixed_location is None else float(plan.fixed_location)
        if fam == "normal":
            scale = sd
        elif fam == "laplace":
            scale = sd / math.sqrt(2.0)
        else:
            scale = sd * math.sqrt((plan.df - 2.0) / plan.df)

    if not scale > 0:
        raise DomainError("degenerate sample: zero scale")
    if fam == "t":
        return Distribution("t", (loc, scale, plan.df))
    return Distribution(fam, (loc, scale))
