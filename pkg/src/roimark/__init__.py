"""Fragile block-based ROI watermarking for 8-bit grayscale medical images.

Embeds a patient record plus authentication and recovery data into an
image, then verifies region integrity, localizes tampered 4x4 blocks and
reconstructs them from block averages stored in the region of non-interest.
"""

from .auth import (
    BlockMapKey,
    Watermark,
    block_permutation,
    map_block,
    md5_digest,
    roi_hash,
    validate_key,
)
from .codec import (
    HeaderPayload,
    bits_from_bytes,
    bits_from_string,
    bits_to_bytes,
    bits_to_string,
    keystream,
    pack_header,
    rle_compress,
    rle_decompress,
    rle_tokens,
    unpack_header,
    xor_crypt,
)
from .engine import (
    EmbedResult,
    EmbedStats,
    PayloadState,
    RecoveredImage,
    VerifyReport,
    embed,
    extract_header,
    recover,
    restore,
    verify,
)
from .errors import (
    BadVersion,
    CapacityExceeded,
    CorruptStream,
    DimensionMismatch,
    EmptyKey,
    FileFormatError,
    IndexOutOfRange,
    InsufficientRoni,
    KeyInvalid,
    NonAsciiEpr,
    NotAuthentic,
    OutOfBounds,
    RoiNotTileable,
    RoiOutOfBounds,
    TooSmall,
    WatermarkError,
)
from .image import (
    GrayImage,
    Region,
    RegionMap,
    RoiRect,
    block_average,
    block_pixels,
    border_coordinates,
    roi_block_averages,
    segment,
)
from .metrics import QualityScore, measure, mssim, psnr
from .pgm import read_pgm, write_pgm
from .tamper import TamperResult, TamperSpec, apply_tamper

__version__ = "0.1.0"

__all__ = [
    "BadVersion",
    "BlockMapKey",
    "CapacityExceeded",
    "CorruptStream",
    "DimensionMismatch",
    "EmbedResult",
    "EmbedStats",
    "EmptyKey",
    "FileFormatError",
    "GrayImage",
    "HeaderPayload",
    "IndexOutOfRange",
    "InsufficientRoni",
    "KeyInvalid",
    "NonAsciiEpr",
    "NotAuthentic",
    "OutOfBounds",
    "PayloadState",
    "QualityScore",
    "RecoveredImage",
    "Region",
    "RegionMap",
    "RoiNotTileable",
    "RoiOutOfBounds",
    "RoiRect",
    "TamperResult",
    "TamperSpec",
    "TooSmall",
    "VerifyReport",
    "Watermark",
    "WatermarkError",
    "apply_tamper",
    "bits_from_bytes",
    "bits_from_string",
    "bits_to_bytes",
    "bits_to_string",
    "block_average",
    "block_permutation",
    "block_pixels",
    "border_coordinates",
    "embed",
    "extract_header",
    "keystream",
    "map_block",
    "md5_digest",
    "measure",
    "mssim",
    "pack_header",
    "psnr",
    "read_pgm",
    "recover",
    "restore",
    "rle_compress",
    "rle_decompress",
    "rle_tokens",
    "roi_block_averages",
    "roi_hash",
    "segment",
    "unpack_header",
    "validate_key",
    "verify",
    "write_pgm",
    "xor_crypt",
]
