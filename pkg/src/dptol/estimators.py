"""
scikit-learn style estimators.

Every estimator learns an interval from a univariate sample in ``fit`` and
exposes it as ``interval_`` (plus ``lower_`` / ``upper_``). ``predict``
flags which new values fall inside; ``score`` is the covered fraction.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .distributions import EmpiricalCDF, parse_distribution
from .empirical_bayes import ElicitationPlan, elicit_a, fit_base
from .exceptions import DomainError
from .mdp import MDPConfig, gibbs_run, mdp_expectation_interval, mdp_tolerance_bg
from .quantile import DPPosterior
from .tolerance import (
    ToleranceInterval,
    ToleranceSpec,
    coverage_probability,
    tolerance_interval,
    wilks_lower,
    wilks_upper,
)

__all__ = [
    "DPToleranceInterval",
    "EmpiricalBayesToleranceInterval",
    "MDPToleranceInterval",
    "WilksToleranceInterval",
    "ESTIMATORS",
    "validate_sample",
]


def validate_sample(X, min_samples=1):
    """Return a 1-D float array from a vector or single-column matrix."""
    arr = np.asarray(X)
    if arr.ndim == 2 and arr.shape[1] != 1:
        raise ValueError(f"expected a single feature, got shape {arr.shape}")
    arr = check_array(
        arr.reshape(-1, 1) if arr.ndim <= 1 else arr,
        ensure_2d=True,
        dtype=np.float64,
        ensure_min_samples=min_samples,
    )
    return arr.ravel()


class _ToleranceEstimator(BaseEstimator):
    _min_samples = 1

    def _spec(self):
        return ToleranceSpec(
            beta=self.beta,
            gamma=self.gamma,
            side=self.side,
            kind=self.kind,
            q_split=self.q_split,
            convention=self.convention,
        )

    def fit(self, X, y=None):
        x = validate_sample(X, self._min_samples)
        self.interval_ = self._fit_interval(x)
        self.lower_ = self.interval_.lower
        self.upper_ = self.interval_.upper
        self.n_samples_ = x.size
        return self

    def predict(self, X):
        check_is_fitted(self, "interval_")
        return self.interval_.contains(validate_sample(X))

    def score(self, X, y=None):
        return float(np.mean(self.predict(X)))

    def coverage(self, true_dist):
        check_is_fitted(self, "interval_")
        return coverage_probability(self.interval_, true_dist)


class DPToleranceInterval(_ToleranceEstimator):
    """Tolerance interval under a ``DP(a, base)`` prior.

    Parameters
    ----------
    a : float
        Concentration; ``0`` gives the purely empirical posterior.
    base : str or Distribution
        Base measure, e.g. ``"normal:0,2"``.
    beta, gamma : float
        Content and credibility.
    side : {"two_sided", "upper", "lower"}
    kind : {"content_gamma", "expectation"}
    q_split : float
        Share of ``1 - beta`` put in the lower tail (expectation kind).
    convention : {"level_and_content_split", "level_split"}
        Two-sided Bonferroni convention (content_gamma kind).
    integration : {"quadrature", "grid"}
        Tail-sum integration scheme for expectation limits.
    grid_step : float
        Lattice spacing when ``integration="grid"``.
    """

    def __init__(self, a=1.0, base="normal:0,1", beta=0.95, gamma=0.95, side="two_sided",
                 kind="content_gamma", q_split=0.5, convention="level_and_content_split",
                 integration="quadrature", grid_step=0.02):
        self.a = a
        self.base = base
        self.beta = beta
        self.gamma = gamma
        self.side = side
        self.kind = kind
        self.q_split = q_split
        self.convention = convention
        self.integration = integration
        self.grid_step = grid_step

    def _posterior(self, x):
        base = None if self.a == 0 and self.base is None else parse_distribution(self.base)
        return DPPosterior(float(self.a), base, EmpiricalCDF(x))

    def _fit_interval(self, x):
        self.posterior_ = self._posterior(x)
        spec = self._spec()
        kw = {}
        if spec.kind == "expectation":
            kw = {"method": self.integration, "step": self.grid_step}
        return tolerance_interval(self.posterior_, spec, **kw)


class EmpiricalBayesToleranceInterval(DPToleranceInterval):
    """DP interval with ``a`` from a schedule in ``n`` and a fitted base."""

    _min_samples = 2

    def __init__(self, a_schedule="sqrt", c=2.0, base_family="normal", fit_mode="mle",
                 fixed_location=None, df=5.0, ddof=0, base=None, beta=0.95, gamma=0.95,
                 side="two_sided", kind="expectation", q_split=0.5,
                 convention="level_and_content_split", integration="quadrature",
                 grid_step=0.02):
        self.a_schedule = a_schedule
        self.c = c
        self.base_family = base_family
        self.fit_mode = fit_mode
        self.fixed_location = fixed_location
        self.df = df
        self.ddof = ddof
        self.base = base
        self.beta = beta
        self.gamma = gamma
        self.side = side
        self.kind = kind
        self.q_split = q_split
        self.convention = convention
        self.integration = integration
        self.grid_step = grid_step

    def _plan(self):
        return ElicitationPlan(
            a_schedule=self.a_schedule,
            c=self.c,
            base_family=self.base_family,
            fit_mode=self.fit_mode,
            fixed_location=self.fixed_location,
            df=self.df,
            ddof=self.ddof,
            base=None if self.base is None else parse_distribution(self.base),
        )

    def _posterior(self, x):
        plan = self._plan()
        self.a_ = elicit_a(plan, x.size)
        self.base_ = fit_base(plan, x)
        return DPPosterior(self.a_, self.base_, EmpiricalCDF(x))


class MDPToleranceInterval(_ToleranceEstimator):
    """Interval under a mixture of DPs with priors on ``a`` and the base."""

    _min_samples = 2

    def __init__(self, a_a=1.0, b_a=1.0, base_family="normal", mu0=0.0, tau0=10.0,
                 ig_shape=1.0, ig_scale=1.0, iterations=5000, burnin=1000, thin=2,
                 random_state=0, beta=0.95, gamma=0.95, side="two_sided",
                 kind="content_gamma", q_split=0.5,
                 convention="level_and_content_split", max_draws=None):
        self.a_a = a_a
        self.b_a = b_a
        self.base_family = base_family
        self.mu0 = mu0
        self.tau0 = tau0
        self.ig_shape = ig_shape
        self.ig_scale = ig_scale
        self.iterations = iterations
        self.burnin = burnin
        self.thin = thin
        self.random_state = random_state
        self.beta = beta
        self.gamma = gamma
        self.side = side
        self.kind = kind
        self.q_split = q_split
        self.convention = convention
        self.max_draws = max_draws

    def _config(self):
        return MDPConfig(
            a_a=self.a_a, b_a=self.b_a, base_family=self.base_family, mu0=self.mu0,
            tau0=self.tau0, ig_shape=self.ig_shape, ig_scale=self.ig_scale,
            iterations=self.iterations, burnin=self.burnin, thin=self.thin,
            seed=int(self.random_state),
        )

    def _fit_interval(self, x):
        spec = self._spec()
        self.draws_ = gibbs_run(self._config(), x)
        if spec.kind == "expectation":
            return mdp_expectation_interval(self.draws_, x, spec.beta, spec.side,
                                            spec.q_split, self.max_draws)
        return mdp_tolerance_bg(self.draws_, x, spec.beta, spec.gamma, spec.side,
                                spec.convention)


class WilksToleranceInterval(_ToleranceEstimator):
    """Frequentist order-statistic interval (one-sided, or two-sided by Bonferroni)."""

    def __init__(self, beta=0.95, gamma=0.95, side="upper"):
        self.beta = beta
        self.gamma = gamma
        self.side = side

    def _spec(self):
        return ToleranceSpec(beta=self.beta, gamma=self.gamma, side=self.side)

    def _fit_interval(self, x):
        side = self._spec().side
        meta = {"kind": "wilks", "side": side, "beta": self.beta, "gamma": self.gamma}
        if side == "upper":
            m, u, inf = wilks_upper(x, self.beta, self.gamma)
            self.rank_ = m
            return ToleranceInterval(-np.inf, u, float("nan"),
                                     {"infeasible_small_n"} if inf else set(), meta)
        if side == "lower":
            m, lo, inf = wilks_lower(x, self.beta, self.gamma)
            self.rank_ = m
            return ToleranceInterval(lo, np.inf, float("nan"),
                                     {"infeasible_small_n"} if inf else set(), meta)
        if side == "two_sided":
            b, g = (1 + self.beta) / 2, 1 - (1 - self.gamma) / 2
            _, lo, inf_lo = wilks_lower(x, b, g)
            _, up, inf_up = wilks_upper(x, b, g)
            flags = {"infeasible_small_n"} if (inf_lo or inf_up) else set()
            return ToleranceInterval(lo, up, float("nan"), flags, meta)
        raise DomainError(f"unknown side {self.side!r}")


ESTIMATORS = {
    cls.__name__: cls
    for cls in (DPToleranceInterval, EmpiricalBayesToleranceInterval,
                MDPToleranceInterval, WilksToleranceInterval)
}
