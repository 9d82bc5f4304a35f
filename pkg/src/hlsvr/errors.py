"""Exception hierarchy shared by every module in the package."""


class HlsvrError(Exception):
    """Base class for all package errors."""


class InputShapeError(HlsvrError, ValueError):
    """Array dimensions disagree with what the operation expects."""


class InvalidInputError(HlsvrError, ValueError):
    """Non-finite values, empty data, bad bounds or out-of-domain settings."""


class NumericalFailure(HlsvrError, ArithmeticError):
    """A linear solve was singular or too ill-conditioned to trust.

    ``condition`` carries the 1-norm condition estimate when one is available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class TuningError(HlsvrError):
    """Every cell of a hyperparameter grid failed.

    ``failures`` maps ``(gamma, theta)`` to the error raised for that cell.
    """

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = dict(failures or {})


class GenerationError(HlsvrError):
    """A response function returned a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegenerateInputError(HlsvrError, ValueError):
    """A statistical test is undefined for the given sample (e.g. all differences zero)."""


class CsvSchemaError(HlsvrError, ValueError):
    """A CSV file does not follow the expected schema; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(HlsvrError, ValueError):
    """Duplicate or inconsistent records in ingested data."""


class ModelFormatError(HlsvrError, ValueError):
    """A serialized model has the wrong format tag or version."""
