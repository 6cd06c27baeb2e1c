"""Exception hierarchy shared by all pertmit modules."""


class ReadoutMitigationError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ReadoutMitigationError, ValueError):
    """A constructed object violates its invariants (bad rates, bad columns, ...)."""


class DimensionMismatchError(ValidationError):
    """Operands describe different qubit counts or incompatible shapes."""


class DecompositionError(ReadoutMitigationError):
    """A response matrix cannot be split into invertible weight bands."""


class SingularMatrixError(ReadoutMitigationError):
    """A linear system is too ill-conditioned for a reliable direct solve."""


class DivergenceError(ReadoutMitigationError):
    """The series iteration was refused because its convergence test failed."""


class ConfigError(ReadoutMitigationError):
    """An experiment configuration file or CLI invocation is invalid."""
