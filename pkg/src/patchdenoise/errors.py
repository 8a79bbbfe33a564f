"""Exception hierarchy shared across the toolkit.

Each family maps to a distinct CLI exit code (see cli.EXIT_CODES).
"""


class PatchDenoiseError(Exception):
    """Base class for all toolkit errors."""


class ContractError(PatchDenoiseError):
    """An operation was called outside its documented preconditions."""


class ShapeError(ContractError):
    """Array dimensions do not match the model or image they are used with."""


class CapacityError(ContractError):
    """Exact enumeration was requested for a model too large to enumerate."""


class DataError(PatchDenoiseError):
    """Input data is missing, empty, or unusable (e.g. empty corpus dir)."""


class CodecError(PatchDenoiseError):
    """An image file could not be decoded.

    ``offset`` is the byte position at which decoding failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class PersistenceError(PatchDenoiseError):
    """A model/corpus file is truncated, corrupt, or of the wrong kind."""
