"""Exception hierarchy. CLI exit codes key off these classes."""


class MirrorRBError(Exception):
    """Base class for all package errors."""


class DimensionError(MirrorRBError, ValueError):
    pass


class StructuralError(MirrorRBError, ValueError):
    """A layer or circuit does not have the shape an operation requires."""


class ConfigurationError(MirrorRBError, ValueError):
    pass


class CapacityError(MirrorRBError):
    """Requested dense simulation exceeds the configured qubit cap."""


class ModelError(MirrorRBError, ValueError):
    """An error model is malformed or produces a non-CPTP channel."""


class UnsupportedModelError(MirrorRBError):
    """The requested simulation mode cannot represent the model."""


class DomainError(MirrorRBError, ValueError):
    pass


class DataError(MirrorRBError, ValueError):
    pass


class FitError(MirrorRBError):
    """A numerical fit failed or the data are degenerate."""


class CoverageError(MirrorRBError, KeyError):
    """Rates are missing for a qubit or edge that the prediction needs."""
