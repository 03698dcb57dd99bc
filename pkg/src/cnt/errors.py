"""Exception hierarchy shared by every module."""


class CNTError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CNTError, ValueError):
    """A configuration value is outside its valid domain."""


class InputError(CNTError, ValueError):
    """Input data violates a precondition (unsorted stream, shape mismatch, ...)."""


class RangeError(CNTError, ValueError):
    """A requested time or displacement lies outside the available data."""


class DegenerateInputError(CNTError, ValueError):
    """Input carries no usable signal (zero variance or zero energy)."""


class ConstraintError(CNTError, ValueError):
    """No candidate parameters satisfy the feasibility constraint."""


class ParseError(CNTError, ValueError):
    """A file could not be parsed; the message names the line or byte offset."""
