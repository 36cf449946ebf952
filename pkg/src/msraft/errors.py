"""Exception types shared across the package."""


class FlowError(Exception):
    """Base class for all msraft errors."""


class InputError(FlowError, ValueError):
    """Invalid argument values or incompatible shapes."""


class NumericError(FlowError, ArithmeticError):
    """Non-finite values produced during estimation."""


class FormatError(FlowError, ValueError):
    """Malformed flow or image files."""


class VolumeLimitError(FlowError, MemoryError):
    """All-pairs cost volume would exceed the configured entry cap."""
