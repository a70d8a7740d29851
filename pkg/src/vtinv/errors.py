"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: ValidationError -> 2, DataError -> 3,
NumericError -> 4.
"""


class VtinvError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(VtinvError):
    """Bad arguments, configuration, or incompatible shapes/sizes."""


class ShapeError(ValidationError):
    """Array shapes do not compose."""


class SizeError(ValidationError):
    """A size precondition is violated (too few rows, utterances, ...)."""


class DataError(VtinvError):
    """On-disk data is malformed, misaligned, or missing."""


class FormatError(DataError):
    """Malformed WAV/PGM/feature/container file."""


class AlignmentError(DataError):
    """Audio length and image frame count disagree beyond tolerance."""


class CorruptionError(DataError):
    """Model container manifest and payload disagree."""


class CoverageError(DataError):
    """Predictions are missing for required utterances."""


class NumericError(VtinvError):
    """A numeric procedure failed (divergence, root finding, non-finite input)."""


class DivergenceError(NumericError):
    """Training loss became non-finite."""
