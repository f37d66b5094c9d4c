"""Exception hierarchy shared by all modules."""


class MmdClassError(Exception):
    """Base class for every error raised by this package."""


class LengthError(MmdClassError, ValueError):
    """A sequence is too short for the unbiased estimator (needs >= 2 samples)."""


class ValidationError(MmdClassError, ValueError):
    """A configuration value violates an invariant.

    ``field`` names the offending parameter so the CLI can point at it.
    """

    def __init__(self, field, rule):
        self.field = field
        self.rule = rule
        super().__init__(f"{field}: {rule}")


class SeparationError(ValidationError):
    """Clusters are not separable (D1 <= D2, or the barred analogue)."""


class MissingNull(ValidationError):
    """A general-case quantity was requested but no null cluster is configured."""


class ArityError(ValidationError):
    """Thresholds do not match what the (test, case) combination needs."""


class DomainError(ValidationError):
    """Thresholds are ordered incorrectly (lambda1 > lambda2)."""


class UnsupportedKernel(MmdClassError, TypeError):
    pass


class UnsupportedUncertainty(MmdClassError, TypeError):
    pass


class SourceExhausted(MmdClassError, RuntimeError):
    """The sample source cannot supply the samples a test asked for."""


class ParseError(MmdClassError, ValueError):
    """The config document is not syntactically valid."""
