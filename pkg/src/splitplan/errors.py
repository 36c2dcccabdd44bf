"""Exception hierarchy. Each class maps to one CLI exit code."""


class SplitPlanError(Exception):
    exit_code = 1


class InvalidInputError(SplitPlanError, ValueError):
    """Malformed matrices, files or arguments."""

    exit_code = 2


class DomainError(SplitPlanError, ValueError):
    """A closed-form expression was evaluated outside its domain."""

    exit_code = 2


class ApplicabilityError(SplitPlanError):
    """The accuracy or step-size precondition of a bound does not hold."""

    exit_code = 3


class SmoothBoundInapplicableError(ApplicabilityError):
    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("ceiling-free bound inapplicable: " + "; ".join(self.failed))


class VerificationError(SplitPlanError):
    exit_code = 4


class ResourceError(SplitPlanError):
    """Requested size exceeds what is materialized or computed densely."""

    exit_code = 5


class InsufficientDataError(SplitPlanError):
    exit_code = 4
