"""Exception hierarchy shared by every module."""


class ConfigurationError(ValueError):
    """Invalid user-supplied configuration (shapes, ranges, schedules, files)."""


class PreconditionError(ValueError):
    """An operation was called on an input that violates its precondition."""


class DegenerateSignalError(ValueError):
    """A signal carries no phase information (e.g. a constant channel)."""


class DivergenceError(RuntimeError):
    """An iterative numerical procedure failed to converge."""

    def __init__(self, message: str, last_residual: float = float("nan")):
        super().__init__(message)
        self.last_residual = last_residual


class FitDivergenceError(DivergenceError):
    """Parameter fit produced a non-finite loss."""

    def __init__(self, message: str, last_iterate=None, last_residual: float = float("nan")):
        super().__init__(message, last_residual)
        self.last_iterate = last_iterate
