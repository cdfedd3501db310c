"""Grayscale image model, three-region segmentation and block tilings.

Every pixel is classified as BORDER (the outer three-pixel frame), ROI (a
rectangle chosen by the operator) or RONI (everything else).  The ROI tiles
into 4x4 blocks and the RONI into 3x3 blocks.  Both tilings, and the border
scan order, are fully deterministic so that the embedding and verifying
sides always agree on pixel and block order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import IndexOutOfRange, RoiNotTileable, RoiOutOfBounds

BORDER_WIDTH = 3
ROI_BLOCK_SIDE = 4
RONI_BLOCK_SIDE = 3
MIN_SIDE = 16  # 3px frame + one 4x4 ROI block + room for a 3x3 RONI block


class Region(IntEnum):
    BORDER = 0
    ROI = 1
    RONI = 2


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable 8-bit grayscale raster.

    ``pixels`` is a read-only ``(height, width)`` uint8 array; coordinates
    throughout the package are ``(row, col)`` pairs indexing it.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D pixel array")
        if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
            raise ValueError(f"image must be at least {MIN_SIDE}x{MIN_SIDE} pixels")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError("pixel values must be integers in 0..255")
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("pixel values must be integers in 0..255")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)

    def tobytes(self) -> bytes:
        """Raw row-major pixel bytes."""
        return self.pixels.tobytes()

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "GrayImage":
        if len(data) != width * height:
            raise ValueError(f"expected {width * height} pixel bytes, got {len(data)}")
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width))


@dataclass(frozen=True)
class RoiRect:
    """ROI rectangle: top-left corner ``(x, y)`` (col, row) and extent ``w x h``.

    Width and height must be multiples of 4 so the region tiles exactly into
    4x4 blocks; placement inside a concrete image is checked separately.
    """

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0 or self.w <= 0 or self.h <= 0:
            raise RoiOutOfBounds(f"degenerate ROI rectangle {self.as_tuple()}")
        if self.w % ROI_BLOCK_SIDE or self.h % ROI_BLOCK_SIDE:
            raise RoiNotTileable(
                f"ROI {self.w}x{self.h} does not tile into "
                f"{ROI_BLOCK_SIDE}x{ROI_BLOCK_SIDE} blocks"
            )

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def n_blocks(self) -> int:
        return (self.w // ROI_BLOCK_SIDE) * (self.h // ROI_BLOCK_SIDE)

    def validate_in(self, width: int, height: int) -> None:
        """Raise RoiOutOfBounds unless the rect lies strictly inside the non-border interior."""
        if (
            self.x < BORDER_WIDTH
            or self.y < BORDER_WIDTH
            or self.x + self.w > width - BORDER_WIDTH
            or self.y + self.h > height - BORDER_WIDTH
        ):
            raise RoiOutOfBounds(
                f"ROI {self.as_tuple()} does not fit the interior of a {width}x{height} image"
            )


@dataclass(frozen=True, eq=False)
class RegionMap:
    """Per-pixel labels plus the derived block tilings and border scan order.

    ``roi_block_anchors`` and ``roni_block_anchors`` hold each block's
    top-left ``(row, col)``; blocks are listed in their deterministic scan
    order.  ``border_coords`` lists border pixels row-major over the image.
    """

    roi: RoiRect
    labels: np.ndarray
    roi_block_anchors: np.ndarray
    roni_block_anchors: np.ndarray
    border_coords: np.ndarray

    def __post_init__(self):
        for name in ("labels", "roi_block_anchors", "roni_block_anchors", "border_coords"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def n_roi_blocks(self) -> int:
        return len(self.roi_block_anchors)

    @property
    def n_roni_blocks(self) -> int:
        return len(self.roni_block_anchors)


def border_coordinates(width: int, height: int) -> np.ndarray:
    """(row, col) pairs of the 3-pixel frame, in row-major order."""
    mask = np.zeros((height, width), dtype=bool)
    mask[:BORDER_WIDTH, :] = True
    mask[-BORDER_WIDTH:, :] = True
    mask[:, :BORDER_WIDTH] = True
    mask[:, -BORDER_WIDTH:] = True
    return np.argwhere(mask).astype(np.int64)


def segment(image: GrayImage, roi: RoiRect) -> RegionMap:
    """Classify every pixel as BORDER / ROI / RONI and derive the block tilings.

    ROI blocks run row-major over the ROI rectangle's 4x4 grid.  RONI blocks
    come from scanning the non-border interior in 3x3 tiles anchored at
    (3, 3) with stride 3, keeping a tile only when all nine of its pixels
    are RONI.  The same scan happens at embed and at verify time, so block
    indices always mean the same pixels on both sides.
    """
    h, w = image.height, image.width
    roi.validate_in(w, h)

    labels = np.full((h, w), Region.RONI, dtype=np.uint8)
    labels[:BORDER_WIDTH, :] = Region.BORDER
    labels[-BORDER_WIDTH:, :] = Region.BORDER
    labels[:, :BORDER_WIDTH] = Region.BORDER
    labels[:, -BORDER_WIDTH:] = Region.BORDER
    labels[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w] = Region.ROI

    by = np.arange(roi.y, roi.y + roi.h, ROI_BLOCK_SIDE)
    bx = np.arange(roi.x, roi.x + roi.w, ROI_BLOCK_SIDE)
    roi_anchors = np.stack(
        [np.repeat(by, len(bx)), np.tile(bx, len(by))], axis=1
    ).astype(np.int64)

    # candidate 3x3 tiles over the interior, row-major, stride 3
    ty = np.arange(BORDER_WIDTH, h - BORDER_WIDTH - RONI_BLOCK_SIDE + 1, RONI_BLOCK_SIDE)
    tx = np.arange(BORDER_WIDTH, w - BORDER_WIDTH - RONI_BLOCK_SIDE + 1, RONI_BLOCK_SIDE)
    grid = labels[
        BORDER_WIDTH : BORDER_WIDTH + len(ty) * RONI_BLOCK_SIDE,
        BORDER_WIDTH : BORDER_WIDTH + len(tx) * RONI_BLOCK_SIDE,
    ]
    tiles = grid.reshape(len(ty), RONI_BLOCK_SIDE, len(tx), RONI_BLOCK_SIDE)
    all_roni = (tiles == Region.RONI).all(axis=(1, 3))
    keep = np.argwhere(all_roni)
    roni_anchors = np.stack(
        [ty[keep[:, 0]], tx[keep[:, 1]]], axis=1
    ).astype(np.int64)

    return RegionMap(
        roi=roi,
        labels=labels,
        roi_block_anchors=roi_anchors,
        roni_block_anchors=roni_anchors,
        border_coords=border_coordinates(w, h),
    )


def block_pixels(region_map: RegionMap, index: int, kind: Region) -> list[tuple[int, int]]:
    """Ordered (row, col) pixels of one block: 16 for ROI, 9 for RONI."""
    if kind == Region.ROI:
        anchors, side = region_map.roi_block_anchors, ROI_BLOCK_SIDE
    elif kind == Region.RONI:
        anchors, side = region_map.roni_block_anchors, RONI_BLOCK_SIDE
    else:
        raise ValueError("kind must be Region.ROI or Region.RONI")
    if not 0 <= index < len(anchors):
        raise IndexOutOfRange(f"{kind.name} block index {index} not in 0..{len(anchors) - 1}")
    ay, ax = int(anchors[index][0]), int(anchors[index][1])
    return [(ay + dy, ax + dx) for dy in range(side) for dx in range(side)]


def block_average(image: GrayImage, block: list[tuple[int, int]]) -> int:
    """Floor average of a block's LSB-masked pixels (pixel AND 0xFE).

    Masking first makes the value independent of the LSB channel, so the
    same number comes out before and after LSB embedding or restoration.
    """
    coords = np.asarray(block, dtype=np.int64)
    if coords.size == 0:
        raise ValueError("block must be nonempty")
    vals = image.pixels[coords[:, 0], coords[:, 1]] & 0xFE
    return int(vals.sum(dtype=np.int64) // len(coords))


def roi_block_averages(pixels: np.ndarray, roi: RoiRect) -> np.ndarray:
    """LSB-masked floor averages of every ROI block, in block scan order."""
    crop = (pixels[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w] & 0xFE).astype(np.int64)
    by = roi.h // ROI_BLOCK_SIDE
    bx = roi.w // ROI_BLOCK_SIDE
    sums = crop.reshape(by, ROI_BLOCK_SIDE, bx, ROI_BLOCK_SIDE).sum(axis=(1, 3))
    return (sums // (ROI_BLOCK_SIDE * ROI_BLOCK_SIDE)).reshape(-1)
