"""
Mixture of Dirichlet processes: Gibbs sampler and draw-averaged intervals.

Model::

    X_i | F ~ F,   F | xi, a ~ DP(a, F0(xi)),   xi ~ p(xi),   a ~ Gamma(a_a, b_a)

Per sweep the sampler updates ``xi`` from ``p(xi) prod f0(x_j; xi)`` over the
distinct values, then the auxiliary ``eta | a ~ Beta(a, n)`` and finally
``a | eta ~ Gamma(a_a + k, b_a - log eta)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .distributions import EmpiricalCDF
from .exceptions import DomainError
from .quantile import BaseBank, DPPosterior, QuantileProcess
from .rng import rng_stream
from .tolerance import (
    ToleranceInterval,
    _lower_limit,
    _upper_limit,
    bonferroni_levels,
    expected_quantile,
)

__all__ = [
    "MDPConfig",
    "MDPDraws",
    "gibbs_run",
    "sample_eta",
    "sample_a",
    "mdp_tolerance_bg",
    "mdp_expectation",
    "mdp_expectation_interval",
]

BASE_FAMILIES = ("normal", "laplace")


@dataclass(frozen=True)
class MDPConfig:
    """Hyperparameters and chain controls.

    ``tau0`` is the prior standard deviation of the location; the scale
    prior is ``sigma^2 ~ Inv-Gamma(ig_shape, ig_scale)``.
    """

    a_a: float = 1.0
    b_a: float = 1.0
    base_family: str = "normal"
    mu0: float = 0.0
    tau0: float = 10.0
    ig_shape: float = 1.0
    ig_scale: float = 1.0
    iterations: int = 5000
    burnin: int = 1000
    thin: int = 2
    seed: int = 0

    def __post_init__(self):
        problems = []
        for name in ("a_a", "b_a", "tau0", "ig_shape", "ig_scale"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0")
        if self.base_family not in BASE_FAMILIES:
            problems.append(f"base_family must be one of {BASE_FAMILIES}")
        if not self.iterations > self.burnin >= 0:
            problems.append("need iterations > burnin >= 0")
        if self.thin < 1:
            problems.append("thin must be >= 1")
        if problems:
            raise DomainError("; ".join(problems))


@dataclass(frozen=True, eq=False)
class MDPDraws:
    """Retained posterior draws of ``(a, mu, sigma^2, eta)``."""

    a_samples: np.ndarray
    xi_samples: np.ndarray  # (S, 2): location, variance
    eta_samples: np.ndarray
    k: int
    base_family: str = "normal"
    acceptance_rate: float = float("nan")

    def __len__(self):
        return int(self.a_samples.size)

    def base_params(self):
        """Base-measure parameters ``(loc, scale)`` per draw."""
        loc = self.xi_samples[:, 0]
        var = self.xi_samples[:, 1]
        if self.base_family == "normal":
            return np.column_stack([loc, np.sqrt(var)])
        # Laplace with variance sigma^2 has scale sigma / sqrt(2)
        return np.column_stack([loc, np.sqrt(var / 2.0)])

    def quantile_process(self, data):
        data = data if isinstance(data, EmpiricalCDF) else EmpiricalCDF(data)
        return QuantileProcess(self.a_samples, BaseBank(self.base_family, self.base_params()), data)

    def posteriors(self, data):
        """Per-draw :class:`DPPosterior` objects."""
        data = data if isinstance(data, EmpiricalCDF) else EmpiricalCDF(data)
        bank = BaseBank(self.base_family, self.base_params())
        return [DPPosterior(float(a), bank.component(s), data) for s, a in enumerate(self.a_samples)]


def sample_eta(a, n, rng):
    """``eta | a ~ Beta(a, n)``, redrawn until strictly inside (0, 1)."""
    for _ in range(1000):
        eta = rng.beta(a, n)
        if 0.0 < eta < 1.0:
            return eta
    # a so small that Beta(a, n) underflows to 0 every time
    return np.nextafter(0.0, 1.0)


def sample_a(a_a, b_a, k, eta, rng):
    """``a | eta ~ Gamma(a_a + k, rate = b_a - log eta)``."""
    rate = b_a - math.log(eta)
    return max(rng.gamma(a_a + k, 1.0 / rate), np.finfo(float).tiny)


def _normal_xi(x, mu, var, cfg, rng):
    # semi-conjugate Gibbs: mu | var then var | mu
    k = x.size
    prec = 1.0 / cfg.tau0**2 + k / var
    mean = (cfg.mu0 / cfg.tau0**2 + x.sum() / var) / prec
    mu = mean + rng.standard_normal() / math.sqrt(prec)
    shape = cfg.ig_shape + 0.5 * k
    scale = cfg.ig_scale + 0.5 * np.sum((x - mu) ** 2)
    var = scale / rng.gamma(shape)
    return mu, var


def _laplace_logpost(x, mu, logvar, cfg):
    var = math.exp(logvar)
    b = math.sqrt(var / 2.0)
    loglik = -x.size * math.log(2.0 * b) - np.sum(np.abs(x - mu)) / b
    logprior_mu = -0.5 * ((mu - cfg.mu0) / cfg.tau0) ** 2
    # inverse-gamma on var, plus Jacobian of the log transform
    logprior_var = -(cfg.ig_shape + 1.0) * logvar - cfg.ig_scale / var + logvar
    return loglik + logprior_mu + logprior_var


def gibbs_run(config, data):
    """Run the sampler and return retained draws.

    Parameters
    ----------
    config : MDPConfig
    data : array_like or EmpiricalCDF
        Sample with ``n >= 2`` and at least two distinct values.
    """
    data = data if isinstance(data, EmpiricalCDF) else EmpiricalCDF(data)
    n = data.n
    if n < 2:
        raise DomainError("the MDP sampler needs n >= 2")
    xs, _ = data.distinct()
    k = int(xs.size)
    if k < 2:
        raise DomainError("degenerate data: all values identical")
    rng = rng_stream(config.seed)
    cfg = config

    a = cfg.a_a / cfg.b_a
    mu = float(xs.mean())
    var = float(xs.var()) if xs.var() > 0 else 1.0
    logvar = math.log(var)
    step = np.array([math.sqrt(var / k), 0.5])
    accepted = 0
    proposals = 0

    keep = (cfg.iterations - cfg.burnin + cfg.thin - 1) // cfg.thin
    a_out = np.empty(keep)
    xi_out = np.empty((keep, 2))
    eta_out = np.empty(keep)
    j = 0
    for it in range(cfg.iterations):
        if cfg.base_family == "normal":
            mu, var = _normal_xi(xs, mu, var, cfg, rng)
        else:
            cur = _laplace_logpost(xs, mu, logvar, cfg)
            prop = np.array([mu, logvar]) + step * rng.standard_normal(2)
            new = _laplace_logpost(xs, prop[0], prop[1], cfg)
            proposals += 1
            if math.log(rng.random()) < new - cur:
                mu, logvar = float(prop[0]), float(prop[1])
                accepted += 1
            if it < cfg.burnin and proposals % 100 == 0:
                # tune toward 20-50% acceptance during burn-in only
                rate = accepted / proposals
                if rate < 0.2:
                    step *= 0.7
                elif rate > 0.5:
                    step *= 1.4
                accepted = proposals = 0
            var = math.exp(logvar)
        eta = sample_eta(a, n, rng)
        a = sample_a(cfg.a_a, cfg.b_a, k, eta, rng)
        if it >= cfg.burnin and (it - cfg.burnin) % cfg.thin == 0:
            a_out[j] = a
            xi_out[j] = (mu, var)
            eta_out[j] = eta
            j += 1
    acc = accepted / proposals if proposals else float("nan")
    return MDPDraws(a_out[:j], xi_out[:j], eta_out[:j], k, cfg.base_family, acc)


def mdp_tolerance_bg(draws, data, beta, gamma, side="two_sided",
                     convention="level_and_content_split"):
    """(beta, gamma) limits from the draw-averaged quantile-process CDF."""
    proc = draws.quantile_process(data)
    meta = {"kind": "content_gamma", "side": side, "beta": beta, "gamma": gamma,
            "draws": len(draws)}
    if side == "upper":
        u, lvl, flags = _upper_limit(proc, beta, gamma)
        return ToleranceInterval(-math.inf, u, lvl, flags, meta)
    if side == "lower":
        lo, lvl, flags = _lower_limit(proc, beta, gamma)
        return ToleranceInterval(lo, math.inf, lvl, flags, meta)
    side_beta, side_level = bonferroni_levels(beta, gamma, convention)
    lo, l_lo, f_lo = _lower_limit(proc, side_beta, side_level)
    up, l_up, f_up = _upper_limit(proc, side_beta, side_level)
    meta.update(convention=convention, side_content=side_beta, side_level=side_level)
    return ToleranceInterval(lo, up, max(0.0, l_lo + l_up - 1.0), f_lo | f_up, meta)


def per_draw_limits(draws, data, q, level):
    """Per-draw quantile-process inversions (diagnostic summary)."""
    return np.array([p.quantile_process().first_crossing(q, level).x
                     for p in draws.posteriors(data)])


def mdp_expectation(draws, data, q, max_draws=None):
    """Average of per-draw ``E[Q(q) | X, a, xi]``."""
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1)")
    posts = draws.posteriors(data)
    if max_draws is not None and len(posts) > max_draws:
        idx = np.linspace(0, len(posts) - 1, max_draws).round().astype(int)
        posts = [posts[i] for i in idx]
    return float(np.mean([expected_quantile(p, q) for p in posts]))


def mdp_expectation_interval(draws, data, beta, side="two_sided", q_split=0.5, max_draws=None):
    q1 = q_split * (1.0 - beta)
    lo, up = -math.inf, math.inf
    if side in ("two_sided", "lower"):
        lo = mdp_expectation(draws, data, q1 if side == "two_sided" else 1.0 - beta, max_draws)
    if side in ("two_sided", "upper"):
        up = mdp_expectation(draws, data, q1 + beta if side == "two_sided" else beta, max_draws)
    meta = {"kind": "expectation", "side": side, "beta": beta, "draws": len(draws)}
    return ToleranceInterval(lo, up, float("nan"), frozenset(), meta)


# re-exported for conditional-distribution checks
eta_law = stats.beta
a_law = stats.gamma
