"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
numeric failures with 3, and failed checks with 1.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown keys, missing fields, bad values."""


class InstanceError(ConfigError):
    """A problem instance was rejected at construction time."""


class UnsupportedInstanceError(ValueError):
    """The requested computation has no exact form for this instance."""


class NumericError(RuntimeError):
    """A numeric routine failed (non-convergence, ill-conditioning)."""


class SeriesConvergenceError(NumericError):
    """A matrix power series does not converge for the given arguments."""


class SingularStepError(NumericError):
    """A per-step linear solve hit a numerically singular matrix."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class DivergenceError(RuntimeError):
    """An iteration produced non-finite or runaway iterates.

    Carries the first offending step index and, when available, the
    truncated trace of the iterates produced before the blow-up.
    """

    def __init__(self, message: str, step: int, trace=None):
        super().__init__(message)
        self.step = step
        self.trace = trace
