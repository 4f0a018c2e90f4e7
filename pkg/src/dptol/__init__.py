"""Bayesian nonparametric tolerance intervals under Dirichlet process priors."""

__version__ = "0.1.0"

from .distributions import Distribution, EmpiricalCDF, SpecialFnContext, parse_distribution, reg_inc_beta
from .empirical_bayes import ElicitationPlan, elicit_a, fit_base
from .estimators import (
    DPToleranceInterval,
    EmpiricalBayesToleranceInterval,
    MDPToleranceInterval,
    WilksToleranceInterval,
)
from .exceptions import (
    ConfigError,
    ConvergenceError,
    DomainError,
    InvertedIntervalError,
    UndefinedPosteriorError,
)
from .mdp import MDPConfig, MDPDraws, gibbs_run, mdp_expectation, mdp_tolerance_bg
from .quantile import (
    DPPosterior,
    expected_quantile,
    posterior_mix_cdf,
    quantile_process_cdf,
    quantile_process_inverse,
)
from .rng import rng_stream
from .simulation import ExperimentConfig, SummaryRow, emit_table, load_config, run_experiment
from .tolerance import (
    ToleranceInterval,
    ToleranceSpec,
    coverage_probability,
    dp_a0_exact_index,
    dp_a0_index,
    expectation_interval,
    min_feasible_n,
    one_sided_lower_bg,
    one_sided_upper_bg,
    tolerance_interval,
    two_sided_bg_bonferroni,
    wilks_lower,
    wilks_upper,
)

__all__ = [name for name in dir() if not name.startswith("_")]
