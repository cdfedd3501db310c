"""Attack injection with ground truth for tamper-detection experiments.

A tamper is applied to declared rectangles only, and the ground truth is
computed from the before/after images at the level the scheme can actually
promise: the set of ROI blocks whose LSB-masked average changed.  Blocks
that were touched without moving their masked average are reported
separately -- they are the scheme's structural blind spot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import OutOfBounds
from .image import GrayImage, RegionMap, roi_block_averages

MODES = ("constant", "random", "lsb_only")


@dataclass(frozen=True)
class TamperSpec:
    """What to destroy: rectangles (x, y, w, h), how, and with which seed."""

    regions: tuple[tuple[int, int, int, int], ...]
    mode: str = "constant"
    value: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not 0 <= self.value <= 255:
            raise ValueError("fill value must be in 0..255")
        object.__setattr__(
            self, "regions", tuple(tuple(int(v) for v in r) for r in self.regions)
        )
        for r in self.regions:
            if len(r) != 4:
                raise ValueError("each region must be (x, y, w, h)")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "value": self.value,
            "seed": self.seed,
            "regions": [list(r) for r in self.regions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TamperSpec":
        return cls(
            regions=tuple(tuple(r) for r in d["regions"]),
            mode=d.get("mode", "constant"),
            value=d.get("value", 0),
            seed=d.get("seed", 0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TamperSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class TamperResult:
    image: GrayImage
    changed_blocks: tuple[int, ...]  # ROI blocks whose masked average moved
    touched_blocks: tuple[int, ...]  # ROI blocks intersecting any region


def _check_region(region, width, height):
    x, y, w, h = region
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > width or y + h > height:
        raise OutOfBounds(f"tamper region {region} exceeds the {width}x{height} image")


def _touched(region_map: RegionMap, regions) -> set[int]:
    hit = set()
    anchors = region_map.roi_block_anchors
    for x, y, w, h in regions:
        overlaps = (
            (anchors[:, 0] < y + h)
            & (anchors[:, 0] + 4 > y)
            & (anchors[:, 1] < x + w)
            & (anchors[:, 1] + 4 > x)
        )
        hit.update(int(i) for i in np.flatnonzero(overlaps))
    return hit


def apply_tamper(image: GrayImage, region_map: RegionMap, spec: TamperSpec) -> TamperResult:
    """Modify the declared regions and report the detectable ground truth."""
    for region in spec.regions:
        _check_region(region, image.width, image.height)

    arr = image.pixels.copy()
    rng = np.random.default_rng(spec.seed)
    for x, y, w, h in spec.regions:
        if spec.mode == "constant":
            arr[y : y + h, x : x + w] = spec.value
        elif spec.mode == "random":
            arr[y : y + h, x : x + w] = rng.integers(0, 256, size=(h, w), dtype=np.uint8)
        else:  # lsb_only
            arr[y : y + h, x : x + w] ^= 1

    before = roi_block_averages(image.pixels, region_map.roi)
    after = roi_block_averages(arr, region_map.roi)
    changed = tuple(int(i) for i in np.flatnonzero(before != after))
    touched = tuple(sorted(_touched(region_map, spec.regions)))
    return TamperResult(image=GrayImage(arr), changed_blocks=changed, touched_blocks=touched)
