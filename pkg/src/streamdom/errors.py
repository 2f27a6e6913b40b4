"""Exception types shared across the package."""


class StreamDomError(Exception):
    """Base class for all package-specific errors."""


class InvalidObjectError(StreamDomError, ValueError):
    """An uncertain object violates a structural invariant."""


class DimensionError(StreamDomError, ValueError):
    """Operands do not share the same attribute dimensionality."""


class SelfComparisonError(StreamDomError, ValueError):
    """An object was compared or scored against itself."""


class OrderingError(StreamDomError, ValueError):
    """Arrival timestamps were presented out of order."""


class ParameterError(StreamDomError, ValueError):
    """A parameter or configuration value violates a stated invariant."""


class DatasetFormatError(StreamDomError, ValueError):
    """A dataset file line cannot be parsed or fails validation."""


class ProtocolError(StreamDomError, RuntimeError):
    """A node received an inconsistent or incomplete message set."""


class ConsistencyError(StreamDomError, RuntimeError):
    """Two views of the same data disagree (e.g. tree vs. window)."""
