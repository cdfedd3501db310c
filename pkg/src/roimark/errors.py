"""Exception types shared across the toolkit."""


class WatermarkError(Exception):
    """Base class for every error raised by this package."""


class RoiOutOfBounds(WatermarkError):
    """ROI rectangle does not fit inside the image's non-border interior."""


class RoiNotTileable(WatermarkError):
    """ROI width or height is not a multiple of the 4-pixel block size."""


class IndexOutOfRange(WatermarkError, IndexError):
    """Block index outside the valid range for its tiling."""


class EmptyKey(WatermarkError, ValueError):
    """Keystream key must be non-empty."""


class CorruptStream(WatermarkError):
    """Run-length token stream cannot produce the expected bit count."""


class BadVersion(WatermarkError):
    """Header version mismatch after decryption: wrong key or tampered border."""


class KeyInvalid(WatermarkError, ValueError):
    """Block-mapping key fails the range, primality or coprimality requirements."""


class InsufficientRoni(WatermarkError):
    """Fewer 3x3 RONI blocks than 4x4 ROI blocks; recovery data has no home."""


class CapacityExceeded(WatermarkError):
    """Compressed watermark does not fit the ROI LSB plane."""


class NonAsciiEpr(WatermarkError, ValueError):
    """Patient record contains bytes outside 7-bit ASCII."""


class NotAuthentic(WatermarkError):
    """Refusing to restore an image whose hash check failed."""


class DimensionMismatch(WatermarkError, ValueError):
    """Images being compared have different dimensions."""


class TooSmall(WatermarkError, ValueError):
    """Image smaller than the metric's sliding window."""


class OutOfBounds(WatermarkError, ValueError):
    """Tamper region exceeds the image bounds."""


class FileFormatError(WatermarkError):
    """Image file is not a readable 8-bit binary PGM."""
