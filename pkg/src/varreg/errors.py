"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`VarregError`.
The ``exit_code`` attribute is what the command line maps the error to.
"""


class VarregError(Exception):
    exit_code = 5


class DocumentError(VarregError):
    """Malformed model document (schema or syntax)."""

    exit_code = 2


class ModelError(VarregError):
    """A model was parsed but violates one of its invariants."""

    exit_code = 3


class DomainError(ModelError):
    pass


class KinkError(ModelError):
    pass


class NotOnGraph(ModelError):
    pass


class UnknownExample(VarregError):
    exit_code = 2


class DimensionError(ModelError):
    pass


class PreconditionError(VarregError):
    exit_code = 4


class AssumptionError(PreconditionError):
    pass


class PerturbationTooLarge(PreconditionError):
    pass


class UnsupportedGeometry(PreconditionError):
    pass


class UnsupportedSize(PreconditionError):
    pass


class CapExceeded(PreconditionError):
    pass


class TrackingFailure(VarregError):
    exit_code = 4


class EstimationFailure(VarregError):
    exit_code = 4


class Unsupported(PreconditionError):
    """The model lies outside the class a routine handles."""
