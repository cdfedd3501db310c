"""End-to-end pipelines: embed, verify, tamper localization, recovery, restore.

Embedding hides three things in one pass: the compressed encrypted watermark
in the ROI's LSB prefix, each ROI block's 8-bit masked average in the LSBs
of its mapped RONI block, and the encrypted 120-bit header in the first
border LSBs.  Verification reverses the walk: header first, then payload,
then the hash check; only when the hash fails does the per-block average
scan run.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import codec
from .auth import (
    BlockMapKey,
    Watermark,
    block_permutation,
    ensure_ascii_epr,
    md5_digest,
    roi_hash,
    validate_key,
)
from .codec import HeaderPayload
from .errors import (
    CapacityExceeded,
    CorruptStream,
    NotAuthentic,
    RoiNotTileable,
    RoiOutOfBounds,
)
from .image import (
    GrayImage,
    Region,
    RegionMap,
    RoiRect,
    border_coordinates,
    roi_block_averages,
    segment,
)
from .metrics import psnr

# first 8 pixels of a 3x3 block, row-major; the 9th pixel is never touched
_CARRIER_DY = np.array([0, 0, 0, 1, 1, 1, 2, 2], dtype=np.int64)
_CARRIER_DX = np.array([0, 1, 2, 0, 1, 2, 0, 1], dtype=np.int64)
_AVG_BIT_SHIFTS = np.arange(7, -1, -1)  # MSB first
_AVG_BIT_WEIGHTS = (1 << _AVG_BIT_SHIFTS).astype(np.int64)


class PayloadState(Enum):
    OK = "ok"
    CORRUPT = "corrupt"


@dataclass(frozen=True)
class EmbedStats:
    w_bits: int
    w_comp_bits: int
    compression_ratio: float  # compressed size as a fraction of the raw watermark
    roi_blocks: int
    roni_blocks_used: int
    psnr_db: float


@dataclass(frozen=True, eq=False)
class EmbedResult:
    watermarked: GrayImage
    header: HeaderPayload
    stats: EmbedStats


@dataclass(frozen=True, eq=False)
class VerifyReport:
    """Outcome of one verification pass.

    ``tampered_blocks`` holds indices into the RegionMap's ROI block order.
    ``epr`` is None when the payload could not be decoded at all, and
    ``block_comparisons`` counts per-block average checks (zero on the
    authentic fast path).
    """

    authentic: bool
    epr: bytes | None
    tampered_blocks: tuple[int, ...]
    header: HeaderPayload
    payload_state: PayloadState
    block_comparisons: int

    @property
    def caveat(self) -> bool:
        """True when recovery data had to be trusted without a decodable payload."""
        return self.payload_state is PayloadState.CORRUPT


@dataclass(frozen=True, eq=False)
class RecoveredImage:
    image: GrayImage
    recovered_blocks: tuple[tuple[int, int], ...]  # (ROI block index, fill value)


def _roi_digest(arr: np.ndarray, roi: RoiRect) -> bytes:
    crop = arr[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w]
    return md5_digest(np.ascontiguousarray(crop).tobytes())


def _write_roi_lsbs(arr: np.ndarray, roi: RoiRect, bits: np.ndarray) -> None:
    """Overwrite the first ``bits.size`` ROI LSBs (row-major) with ``bits``."""
    block = arr[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w].copy()
    flat = block.reshape(-1)
    n = bits.size
    flat[:n] = (flat[:n] & 0xFE) | bits
    arr[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w] = block


def _read_roi_lsbs(arr: np.ndarray, roi: RoiRect) -> np.ndarray:
    return (arr[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w] & 1).reshape(-1)


def _carrier_coords(rmap: RegionMap, key: BlockMapKey) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of the 8 carrier pixels for every ROI block, mapped order."""
    anchors = rmap.roni_block_anchors[block_permutation(key)]
    rows = anchors[:, 0:1] + _CARRIER_DY
    cols = anchors[:, 1:2] + _CARRIER_DX
    return rows, cols


def _stored_averages(arr: np.ndarray, rmap: RegionMap, key: BlockMapKey) -> np.ndarray:
    rows, cols = _carrier_coords(rmap, key)
    bits = (arr[rows, cols] & 1).astype(np.int64)
    return bits @ _AVG_BIT_WEIGHTS


def embed(image: GrayImage, roi: RoiRect, epr, k1, k: int) -> EmbedResult:
    """Watermark an image: returns the marked copy plus embedding statistics.

    No pixel moves by more than one intensity level, since every write is an
    LSB substitution.  Raises CapacityExceeded before touching anything when
    the compressed watermark cannot fit the ROI LSB plane.
    """
    rmap = segment(image, roi)
    key = validate_key(k, rmap.n_roi_blocks, rmap.n_roni_blocks)
    epr = ensure_ascii_epr(epr)

    digest = roi_hash(image, roi)
    wm = Watermark(digest=digest, roi_lsbs=_read_roi_lsbs(image.pixels, roi), epr=epr)
    w = wm.to_bits()
    w_comp = codec.rle_compress(w)
    if w_comp.size > roi.area:
        raise CapacityExceeded(
            f"compressed watermark of {w_comp.size} bits exceeds the "
            f"{roi.area}-bit ROI capacity (raw watermark {w.size} bits)"
        )
    payload = codec.xor_crypt(w_comp, k1)

    header = HeaderPayload(
        roi_x=roi.x,
        roi_y=roi.y,
        roi_w=roi.w,
        roi_h=roi.h,
        payload_len_bits=int(payload.size),
        epr_len_bytes=len(epr),
    )
    header_bits = codec.xor_crypt(codec.pack_header(header), k1)

    arr = image.pixels.copy()
    _write_roi_lsbs(arr, roi, payload)

    averages = roi_block_averages(image.pixels, roi)
    rows, cols = _carrier_coords(rmap, key)
    avg_bits = ((averages[:, None] >> _AVG_BIT_SHIFTS) & 1).astype(np.uint8)
    arr[rows, cols] = (arr[rows, cols] & 0xFE) | avg_bits

    bc = rmap.border_coords[: codec.HEADER_BITS]
    arr[bc[:, 0], bc[:, 1]] = (arr[bc[:, 0], bc[:, 1]] & 0xFE) | header_bits

    marked = GrayImage(arr)
    stats = EmbedStats(
        w_bits=int(w.size),
        w_comp_bits=int(w_comp.size),
        compression_ratio=w_comp.size / w.size,
        roi_blocks=rmap.n_roi_blocks,
        roni_blocks_used=rmap.n_roi_blocks,
        psnr_db=psnr(image, marked),
    )
    return EmbedResult(watermarked=marked, header=header, stats=stats)


def extract_header(image: GrayImage, k1) -> HeaderPayload:
    """Decrypt and parse the 120-bit header from the first border LSBs.

    Raises BadVersion when the version byte is wrong (wrong key, or the
    border was modified) and RoiOutOfBounds when the decoded fields cannot
    describe a region of this image.
    """
    bc = border_coordinates(image.width, image.height)[: codec.HEADER_BITS]
    bits = image.pixels[bc[:, 0], bc[:, 1]] & 1
    try:
        header = codec.unpack_header(codec.xor_crypt(bits, k1))
        rect = RoiRect(header.roi_x, header.roi_y, header.roi_w, header.roi_h)
        rect.validate_in(image.width, image.height)
    except (RoiNotTileable, RoiOutOfBounds, ValueError) as exc:
        if isinstance(exc, RoiOutOfBounds):
            raise
        raise RoiOutOfBounds(f"header describes an impossible region: {exc}") from exc
    return header


@dataclass(frozen=True, eq=False)
class _Analysis:
    report: VerifyReport
    rmap: RegionMap
    arr: np.ndarray  # image copy, original LSBs restored when the payload decoded
    stored: np.ndarray | None  # per-block carrier averages when the scan ran
    flagged: np.ndarray


def _detect(arr: np.ndarray, rmap: RegionMap, key: BlockMapKey):
    current = roi_block_averages(arr, rmap.roi)
    stored = _stored_averages(arr, rmap, key)
    flagged = np.flatnonzero(current != stored)
    return flagged, stored, rmap.n_roi_blocks


def _analyze(image: GrayImage, k1, k: int) -> _Analysis:
    header = extract_header(image, k1)
    roi = RoiRect(header.roi_x, header.roi_y, header.roi_w, header.roi_h)
    rmap = segment(image, roi)
    key = validate_key(k, rmap.n_roi_blocks, rmap.n_roni_blocks)
    arr = image.pixels.copy()

    payload = _read_roi_lsbs(arr, roi)[: header.payload_len_bits]
    expected = 128 + roi.area + 8 * header.epr_len_bytes
    try:
        w = codec.rle_decompress(codec.xor_crypt(payload, k1), expected)
        wm = Watermark.from_bits(w, roi.area, header.epr_len_bytes)
    except CorruptStream:
        # payload destroyed: skip restoration, localize on masked averages alone
        flagged, stored, comparisons = _detect(arr, rmap, key)
        report = VerifyReport(
            authentic=False,
            epr=None,
            tampered_blocks=tuple(int(i) for i in flagged),
            header=header,
            payload_state=PayloadState.CORRUPT,
            block_comparisons=comparisons,
        )
        return _Analysis(report, rmap, arr, stored, flagged)

    _write_roi_lsbs(arr, roi, wm.roi_lsbs)
    authentic = wm.digest == _roi_digest(arr, roi)
    if authentic:
        report = VerifyReport(
            authentic=True,
            epr=wm.epr,
            tampered_blocks=(),
            header=header,
            payload_state=PayloadState.OK,
            block_comparisons=0,
        )
        return _Analysis(report, rmap, arr, None, np.empty(0, dtype=np.int64))

    flagged, stored, comparisons = _detect(arr, rmap, key)
    report = VerifyReport(
        authentic=False,
        epr=wm.epr,
        tampered_blocks=tuple(int(i) for i in flagged),
        header=header,
        payload_state=PayloadState.OK,
        block_comparisons=comparisons,
    )
    return _Analysis(report, rmap, arr, stored, flagged)


def verify(image: GrayImage, k1, k: int) -> VerifyReport:
    """Check ROI integrity and localize tampered blocks.

    The authentic fast path stops at the hash comparison and performs zero
    per-block checks.  Tampering shows up as report state, never as an
    exception; only an unreadable header raises.
    """
    return _analyze(image, k1, k).report


def recover(image: GrayImage, k1, k: int) -> tuple[RecoveredImage, VerifyReport]:
    """Verify, then rebuild flagged blocks from their stored averages.

    Every flagged block is filled with the 8-bit average its mapped RONI
    block carries; unflagged ROI pixels keep their restored LSBs when the
    payload decoded.  RONI and border LSBs are zeroed on the way out, which
    also destroys the carried recovery data -- recovery is a terminal step.
    """
    analysis = _analyze(image, k1, k)
    rmap, arr = analysis.rmap, analysis.arr
    recovered: list[tuple[int, int]] = []
    for i in analysis.flagged:
        ay, ax = rmap.roi_block_anchors[i]
        fill = int(analysis.stored[i])
        arr[ay : ay + 4, ax : ax + 4] = fill
        recovered.append((int(i), fill))
    arr[rmap.labels != Region.ROI] &= 0xFE
    return RecoveredImage(GrayImage(arr), tuple(recovered)), analysis.report


def restore(image: GrayImage, k1, k: int) -> GrayImage:
    """Reverse the embedding on an authentic image.

    The returned image's ROI equals the original bit for bit; RONI and
    border LSBs are set to zero.  Raises NotAuthentic when the hash check
    fails -- use recover() on tampered images.
    """
    analysis = _analyze(image, k1, k)
    if not analysis.report.authentic:
        raise NotAuthentic("hash mismatch: the region was modified; use recover()")
    arr = analysis.arr
    arr[analysis.rmap.labels != Region.ROI] &= 0xFE
    return GrayImage(arr)
