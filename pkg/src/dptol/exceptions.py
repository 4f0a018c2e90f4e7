"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(ArithmeticError):
    """An iterative numerical routine hit its iteration cap."""


class UndefinedPosteriorError(ValueError):
    """Posterior with zero concentration and no data."""


class InvertedIntervalError(ArithmeticError):
    """Two one-sided limits crossed (lower > upper)."""

    def __init__(self, lower, upper):
        super().__init__(f"lower limit {lower!r} exceeds upper limit {upper!r}")
        self.lower = lower
        self.upper = upper


class ConfigError(ValueError):
    """Invalid experiment or run configuration; carries every violation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
