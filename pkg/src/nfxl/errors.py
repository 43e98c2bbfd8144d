"""Exception types shared across the toolkit."""


class NfxlError(Exception):
    """Base class for all toolkit errors."""


class CoincidentUser(NfxlError):
    """A user position coincides with an antenna element."""


class DimensionMismatch(NfxlError):
    """Vector/matrix shapes are incompatible."""


class ZeroChannel(NfxlError):
    """A channel column has zero norm."""


class RankDeficient(NfxlError):
    """The channel Gram matrix is numerically singular."""


class InvalidGrid(NfxlError):
    """Codebook grid parameters are out of range."""


class InsufficientCodebook(NfxlError):
    """More users than available codewords."""


class SingleClass(NfxlError):
    """Calibration data contains only one field label."""


class LengthMismatch(NfxlError):
    """Prediction and truth sequences differ in length."""


class FormatError(NfxlError):
    """A serialized dataset file is malformed.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class VersionMismatch(NfxlError):
    """A serialized file declares an unsupported format version."""


class IdMismatch(NfxlError):
    """Prediction record ids do not align with the dataset."""


class InfeasiblePrediction(NfxlError):
    """A predicted (lambda, p) pair violates the simplex constraints."""


class MissingOracle(NfxlError):
    """An operation requires oracle targets the dataset does not carry."""


class ConfigError(NfxlError):
    """A run configuration failed validation."""
