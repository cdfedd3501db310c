"""Binary PGM (P5) reading and writing, byte-exact for 8-bit images.

Only maxval 255 is accepted: the format is the normative carrier for the
watermark, so there must be exactly one byte per pixel with no rescaling.
"""

from __future__ import annotations

import os


from .errors import FileFormatError
from .image import GrayImage

_WHITESPACE = b" \t\r\n\v\f"


def _tokens(data: bytes):
    """Header tokens per the netpbm rules: whitespace-separated, '#' comments."""
    i = 0
    while i < len(data):
        c = data[i : i + 1]
        if c in _WHITESPACE:
            i += 1
        elif c == b"#":
            j = data.find(b"\n", i)
            i = len(data) if j < 0 else j + 1
        else:
            j = i
            while j < len(data) and data[j : j + 1] not in _WHITESPACE and data[j : j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def read_pgm(path: str | os.PathLike) -> GrayImage:
    with open(path, "rb") as f:
        data = f.read()
    it = _tokens(data)
    try:
        magic, _ = next(it)
        if magic != b"P5":
            raise FileFormatError(f"{path}: not a binary PGM (magic {magic!r})")
        (width_tok, _), (height_tok, _), (maxval_tok, end) = next(it), next(it), next(it)
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except (StopIteration, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise FileFormatError(f"{path}: maxval must be 255, got {maxval}")
    raster = data[end + 1 :]  # single whitespace byte after maxval, then the raster
    if len(raster) != width * height:
        raise FileFormatError(
            f"{path}: expected {width * height} raster bytes, got {len(raster)}"
        )
    try:
        return GrayImage.from_bytes(width, height, raster)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_pgm(path: str | os.PathLike, image: GrayImage) -> None:
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header + image.pixels.tobytes())
