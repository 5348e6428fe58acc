"""Exception hierarchy for qjasim."""


class QjasimError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(QjasimError, ValueError):
    """An argument is outside its documented domain."""


class NumericRangeError(QjasimError, ArithmeticError):
    """A computation would leave the range representable in float64."""

    def __init__(self, message, step=None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


class UndefinedGapError(QjasimError):
    """A gap was requested for a system with fewer than two levels."""


class PreconditionError(QjasimError, ValueError):
    pass


class PErrorCapError(PreconditionError):
    """The per-step error probability bound dbeta * max E < 1 is violated."""


class ResourceError(QjasimError):
    pass


class ZeroProbabilityError(QjasimError):
    """Post-selection on a branch that carries no weight."""

    def __init__(self, message, underflow=False):
        super().__init__(message)
        self.underflow = underflow


class ConfigError(QjasimError):
    """Experiment configuration failed validation.

    ``problems`` holds one ``(path, expected, found)`` triple per violation.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{path}: expected {expected}, found {found}" for path, expected, found in self.problems]
        super().__init__("invalid config:\n  " + "\n  ".join(lines))
