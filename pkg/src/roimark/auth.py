"""Authentication primitives: ROI hashing, watermark assembly, block mapping.

The watermark is the concatenation of the ROI digest, the ROI's original
LSB plane and the patient record.  Each 4x4 ROI block is additionally
assigned a 3x3 RONI block via a keyed modular mapping; that block carries
the ROI block's 8-bit recovery average.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .codec import bits_from_bytes, bits_to_bytes
from .errors import IndexOutOfRange, InsufficientRoni, KeyInvalid, NonAsciiEpr
from .image import GrayImage, RoiRect

DIGEST_BITS = 128


def md5_digest(data: bytes) -> bytes:
    """RFC 1321 MD5 digest, 16 bytes."""
    return hashlib.md5(data).digest()


def roi_hash(image: GrayImage, roi: RoiRect) -> bytes:
    """MD5 over the ROI's full 8-bit pixels, serialized row-major.

    The hash covers whole pixel values including LSBs, so it certifies the
    region bit-for-bit once the original LSB plane has been restored.
    """
    roi.validate_in(image.width, image.height)
    crop = image.pixels[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w]
    return md5_digest(np.ascontiguousarray(crop).tobytes())


def ensure_ascii_epr(epr) -> bytes:
    """Coerce a patient record to bytes, rejecting anything beyond 7-bit ASCII."""
    if isinstance(epr, str):
        try:
            epr = epr.encode("ascii")
        except UnicodeEncodeError as exc:
            raise NonAsciiEpr("patient record must be 7-bit ASCII") from exc
    epr = bytes(epr)
    if epr and max(epr) > 0x7F:
        raise NonAsciiEpr("patient record must be 7-bit ASCII")
    return epr


@dataclass(frozen=True, eq=False)
class Watermark:
    """The (digest, ROI LSB plane, patient record) triple.

    Bit form is the plain concatenation: 128 digest bits, then one bit per
    ROI pixel row-major, then the record bytes MSB-first.
    """

    digest: bytes
    roi_lsbs: np.ndarray
    epr: bytes

    def __post_init__(self):
        if len(self.digest) != DIGEST_BITS // 8:
            raise ValueError("digest must be 16 bytes")
        arr = np.asarray(self.roi_lsbs, dtype=np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "roi_lsbs", arr)

    @property
    def n_bits(self) -> int:
        return DIGEST_BITS + self.roi_lsbs.size + 8 * len(self.epr)

    def to_bits(self) -> np.ndarray:
        return np.concatenate(
            [bits_from_bytes(self.digest), self.roi_lsbs, bits_from_bytes(self.epr)]
        )

    @classmethod
    def from_bits(cls, bits: np.ndarray, roi_pixel_count: int, epr_len_bytes: int) -> "Watermark":
        expected = DIGEST_BITS + roi_pixel_count + 8 * epr_len_bytes
        if bits.size != expected:
            raise ValueError(f"expected {expected} watermark bits, got {bits.size}")
        digest = bits_to_bytes(bits[:DIGEST_BITS])
        lsbs = bits[DIGEST_BITS : DIGEST_BITS + roi_pixel_count]
        epr = bits_to_bytes(bits[DIGEST_BITS + roi_pixel_count :])
        return cls(digest=digest, roi_lsbs=lsbs, epr=epr)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class BlockMapKey:
    """Secret multiplier for the ROI-to-RONI block mapping.

    ``k`` must be a prime strictly between 1 and the ROI block count and
    coprime with it; coprimality is what makes the mapping a permutation,
    so a prime that divides the block count is rejected too.
    """

    k: int
    n_roi_blocks: int

    def __post_init__(self):
        k, n = self.k, self.n_roi_blocks
        if not 1 < k < n:
            raise KeyInvalid(f"k={k} must satisfy 1 < k < {n}")
        if not _is_prime(k):
            raise KeyInvalid(f"k={k} is not prime")
        if math.gcd(k, n) != 1:
            raise KeyInvalid(
                f"k={k} divides the ROI block count {n}; the mapping would collapse"
            )


def validate_key(k: int, n_roi_blocks: int, n_roni_blocks: int) -> BlockMapKey:
    """Check the mapping key and that the RONI can carry one block per ROI block."""
    key = BlockMapKey(k=k, n_roi_blocks=n_roi_blocks)
    if n_roni_blocks < n_roi_blocks:
        raise InsufficientRoni(
            f"{n_roni_blocks} RONI blocks cannot carry recovery data "
            f"for {n_roi_blocks} ROI blocks"
        )
    return key


def map_block(b_roi: int, key: BlockMapKey) -> int:
    """Map 1-based ROI block ``b_roi`` to its 1-based RONI carrier block.

    Computes ((k * b_roi) mod N) + 1 with N the ROI block count; over
    b_roi = 1..N this is a permutation of 1..N.
    """
    if not 1 <= b_roi <= key.n_roi_blocks:
        raise IndexOutOfRange(f"block number {b_roi} not in 1..{key.n_roi_blocks}")
    return (key.k * b_roi) % key.n_roi_blocks + 1


def block_permutation(key: BlockMapKey) -> np.ndarray:
    """0-based carrier index for every 0-based ROI block, as one array."""
    i = np.arange(1, key.n_roi_blocks + 1, dtype=np.int64)
    return (key.k * i) % key.n_roi_blocks
