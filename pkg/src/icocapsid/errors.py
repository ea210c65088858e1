class SolverError(RuntimeError):
    """A solver stopped without meeting its convergence criterion.

    ``iterate`` and ``residuals`` hold the last state reached.
    """

    def __init__(self, message, iterate=None, residuals=None):
        super().__init__(message)
        self.iterate = iterate
        self.residuals = residuals or {}


class OracleError(SolverError):
    pass


class InstabilityError(RuntimeError):
    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class ConfigError(ValueError):
    pass
