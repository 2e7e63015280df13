"""Exception hierarchy.

The CLI maps these classes onto process exit codes: validation problems exit
with 2, cap violations with 3 and broken identities with 4.
"""


class DecoderError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ValidationError(DecoderError, ValueError):
    """Bad user input: wrong shapes, unknown labels, invalid parameters."""

    exit_code = 2

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class LayoutError(ValidationError):
    """Label bookkeeping failure (duplicate or unknown subsystem label)."""


class CapExceededError(DecoderError):
    """A dimension or polynomial-degree cap would be exceeded."""

    exit_code = 3

    def __init__(self, what: str, required: int, allowed: int):
        self.what = what
        self.required = required
        self.allowed = allowed
        super().__init__(f"{what}: required {required}, allowed {allowed}")


class InvariantViolation(DecoderError, AssertionError):
    """An identity that must hold exactly at this scale failed numerically."""

    exit_code = 4


class PhaseFindingError(DecoderError, RuntimeError):
    """The QSP phase optimiser did not reach the required residual."""

    exit_code = 4


class NotFittedError(DecoderError, AttributeError):
    """Estimator used before ``fit``."""
