class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists one message per problem."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConvergenceError(RuntimeError):
    """Fixed-point iteration did not converge; carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OracleError(RuntimeError):
    """A reference solution could not be computed at the requested resolution."""
