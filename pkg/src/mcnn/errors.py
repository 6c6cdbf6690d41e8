"""Exception types shared across the package."""


class McnnError(Exception):
    """Base class for all package errors."""


class ShapeError(McnnError, ValueError):
    """Raised when array dimensions do not line up."""


class InputError(McnnError, ValueError):
    """Raised when an argument violates an operation's precondition."""


class FormatError(McnnError, ValueError):
    """Raised when a serialized artifact cannot be parsed or fails validation."""
