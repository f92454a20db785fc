"""Exception hierarchy shared by all modules."""


class QImproveError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(QImproveError, ValueError):
    """Input failed a structural or numerical check.

    ``field`` names the offending input when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NonHermitian(ValidationError):
    def __init__(self, max_deviation, field=None):
        super().__init__(
            f"operator is not Hermitian (max deviation {max_deviation:.3e})", field
        )
        self.max_deviation = max_deviation


class DimensionMismatch(ValidationError):
    pass


class NotOrthonormal(ValidationError):
    def __init__(self, max_gram_deviation):
        super().__init__(
            f"states are not orthonormal (max Gram deviation {max_gram_deviation:.3e})"
        )
        self.max_gram_deviation = max_gram_deviation


class NotProjector(ValidationError):
    pass


class ParseError(QImproveError):
    """Problem file is malformed (bad JSON, missing or mistyped field)."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class EigenFailure(QImproveError):
    pass


class NormDrift(QImproveError):
    def __init__(self, drift):
        super().__init__(f"state norm drifted by {drift:.3e}")
        self.drift = drift


class SingularUnavailable(QImproveError):
    """beta=0, K1 vanished and no singular control value was supplied."""


class NoImprovement(QImproveError):
    """Line search exhausted without a strict decrease of J."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MonotonicityFailure(QImproveError):
    """Damping toward the old control did not restore J_after <= J_before."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BracketFailure(QImproveError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class BudgetExceeded(QImproveError):
    pass


class StepOutOfBounds(QImproveError):
    pass
