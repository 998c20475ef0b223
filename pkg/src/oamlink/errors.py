"""Exception types raised across the toolkit."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """An optimizer exhausted its budget; the best iterate is attached."""

    def __init__(self, message, best=None, best_params=None, objective=None):
        super().__init__(message)
        self.best = best
        self.best_params = best_params
        self.objective = objective


class UndefinedCorrelationError(ValidationError):
    """Correlation ratio requested with an all-zero denominator."""


class ResamplingError(RuntimeError):
    """Too many bootstrap resamples failed for the error bar to be trusted."""
