"""Bit-level plumbing: bit arrays, run-length coding, keyed XOR, header packing.

Bits travel as numpy uint8 arrays holding 0/1 values.  Every multi-bit field
in this module is big-endian, most significant bit first, so independent
implementations produce identical streams.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadVersion, CorruptStream, EmptyKey

RLE_MAX_RUN = 7  # 3-bit run-length field; code 000 is reserved/invalid
TOKEN_BITS = 4
HEADER_BITS = 120
HEADER_VERSION = 0x01
_HEADER_FMT = ">BHHHHIH"  # version, roi x/y/w/h, payload bits, EPR bytes


def as_bits(data) -> np.ndarray:
    """Normalize a bit sequence (array, list, '0'/'1' string) to uint8 0/1."""
    if isinstance(data, str):
        return bits_from_string(data)
    bits = np.asarray(data, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("bit sequence must be one-dimensional")
    if bits.size and bits.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    return bits


def bits_from_string(s: str) -> np.ndarray:
    if s and set(s) - {"0", "1"}:
        raise ValueError("bit string may contain only '0' and '1'")
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")


def bits_to_string(bits) -> str:
    return "".join("01"[b] for b in as_bits(bits))


def bits_from_bytes(data: bytes) -> np.ndarray:
    """Bytes to bits, MSB first within each byte."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bits_to_bytes(bits) -> bytes:
    bits = as_bits(bits)
    if bits.size % 8:
        raise ValueError("bit count must be a multiple of 8")
    return np.packbits(bits).tobytes()


def _runs(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Maximal runs of identical bits: (values, lengths)."""
    boundaries = np.flatnonzero(np.diff(bits)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [bits.size]))
    return bits[starts], ends - starts


def rle_compress(data) -> np.ndarray:
    """Run-length encode bits into (3-bit length, 1-bit symbol) tokens.

    Runs longer than 7 are split greedily, so every token's length field is
    1..7 and the output is exactly 4 bits per token.
    """
    bits = as_bits(data)
    if bits.size == 0:
        return np.empty(0, dtype=np.uint8)
    values, lengths = _runs(bits)
    n_full = lengths // RLE_MAX_RUN
    remainder = lengths % RLE_MAX_RUN
    tokens_per_run = n_full + (remainder > 0)
    total = int(tokens_per_run.sum())

    token_len = np.full(total, RLE_MAX_RUN, dtype=np.uint8)
    last_of_run = np.cumsum(tokens_per_run) - 1
    has_rem = remainder > 0
    token_len[last_of_run[has_rem]] = remainder[has_rem]
    token_sym = np.repeat(values, tokens_per_run)

    out = np.empty(total * TOKEN_BITS, dtype=np.uint8)
    out[0::4] = (token_len >> 2) & 1
    out[1::4] = (token_len >> 1) & 1
    out[2::4] = token_len & 1
    out[3::4] = token_sym
    return out


def rle_decompress(data, expected_len: int) -> np.ndarray:
    """Expand tokens until exactly ``expected_len`` bits are produced.

    The stream is length-delimited rather than self-terminating; the caller
    knows the plaintext size from the header and the fixed field widths.
    Raises CorruptStream when a reserved zero-length token is consumed, the
    stream runs out early, or a token overshoots the expected length --
    all of which signal a tampered payload.
    """
    if expected_len < 0:
        raise ValueError("expected_len must be non-negative")
    if expected_len == 0:
        return np.empty(0, dtype=np.uint8)
    bits = as_bits(data)
    usable = bits[: bits.size - bits.size % TOKEN_BITS]
    if usable.size == 0:
        raise CorruptStream("token stream exhausted before any output")
    token_len = (usable[0::4] << 2) | (usable[1::4] << 1) | usable[2::4]
    token_sym = usable[3::4]
    produced = np.cumsum(token_len.astype(np.int64))
    reached = np.flatnonzero(produced >= expected_len)
    if reached.size == 0:
        raise CorruptStream(
            f"token stream exhausted after {int(produced[-1])} of {expected_len} bits"
        )
    cut = int(reached[0])
    if produced[cut] != expected_len:
        raise CorruptStream("token overshoots the expected bit count")
    used = token_len[: cut + 1]
    if np.any(used == 0):
        raise CorruptStream("reserved zero run length in token stream")
    return np.repeat(token_sym[: cut + 1], used)


def rle_tokens(data) -> list[tuple[int, int]]:
    """Decode a token stream into (run_length, symbol) pairs, for inspection."""
    bits = as_bits(data)
    if bits.size % TOKEN_BITS:
        raise ValueError("token stream length must be a multiple of 4 bits")
    token_len = (bits[0::4] << 2) | (bits[1::4] << 1) | bits[2::4]
    if np.any(token_len == 0):
        raise CorruptStream("reserved zero run length in token stream")
    return list(zip(token_len.tolist(), bits[3::4].tolist()))


def _key_bytes(key) -> bytes:
    if isinstance(key, str):
        key = key.encode("utf-8")
    if not isinstance(key, (bytes, bytearray)):
        raise TypeError("key must be text or bytes")
    if len(key) == 0:
        raise EmptyKey("key must be non-empty")
    return bytes(key)


def keystream(key, nbits: int) -> np.ndarray:
    """Deterministic keyed bit stream: MD5(key || counter) blocks, truncated.

    The counter is a 32-bit big-endian block index starting at 0; digests
    are concatenated MSB-first and cut to ``nbits``.
    """
    kb = _key_bytes(key)
    if nbits < 0:
        raise ValueError("nbits must be non-negative")
    if nbits == 0:
        return np.empty(0, dtype=np.uint8)
    n_blocks = (nbits + 127) // 128
    raw = b"".join(
        hashlib.md5(kb + i.to_bytes(4, "big")).digest() for i in range(n_blocks)
    )
    return bits_from_bytes(raw)[:nbits]


def xor_crypt(data, key) -> np.ndarray:
    """XOR bits with the keyed stream; applying it twice restores the input."""
    bits = as_bits(data)
    return bits ^ keystream(key, bits.size)


@dataclass(frozen=True)
class HeaderPayload:
    """The 120-bit record embedded into border-pixel LSBs.

    Describes where the ROI sits and how much payload the receiver must pull
    back out of it: the encrypted compressed watermark length in bits, and
    the patient-record length in bytes.
    """

    roi_x: int
    roi_y: int
    roi_w: int
    roi_h: int
    payload_len_bits: int
    epr_len_bytes: int
    version: int = HEADER_VERSION

    def __post_init__(self):
        if self.version != HEADER_VERSION:
            raise ValueError(f"unsupported header version {self.version}")
        for name in ("roi_x", "roi_y", "roi_w", "roi_h", "epr_len_bytes"):
            v = getattr(self, name)
            if not 0 <= v < 1 << 16:
                raise ValueError(f"{name}={v} out of 16-bit range")
        if not 0 <= self.payload_len_bits < 1 << 32:
            raise ValueError(f"payload_len_bits={self.payload_len_bits} out of 32-bit range")
        if self.payload_len_bits > self.roi_w * self.roi_h:
            raise ValueError(
                f"payload of {self.payload_len_bits} bits cannot fit a "
                f"{self.roi_w}x{self.roi_h} region"
            )


def pack_header(header: HeaderPayload) -> np.ndarray:
    """Serialize to the fixed 120-bit big-endian layout."""
    raw = struct.pack(
        _HEADER_FMT,
        header.version,
        header.roi_x,
        header.roi_y,
        header.roi_w,
        header.roi_h,
        header.payload_len_bits,
        header.epr_len_bytes,
    )
    return bits_from_bytes(raw)


def unpack_header(bits) -> HeaderPayload:
    """Parse 120 bits back into a HeaderPayload.

    Raises BadVersion when the version byte is wrong (wrong key or tampered
    border) and ValueError when the remaining fields are not a possible
    header.
    """
    bits = as_bits(bits)
    if bits.size != HEADER_BITS:
        raise ValueError(f"header must be exactly {HEADER_BITS} bits, got {bits.size}")
    version, x, y, w, h, payload, epr = struct.unpack(_HEADER_FMT, bits_to_bytes(bits))
    if version != HEADER_VERSION:
        raise BadVersion(f"header version {version:#04x}: wrong key or tampered border")
    return HeaderPayload(
        roi_x=x, roi_y=y, roi_w=w, roi_h=h,
        payload_len_bits=payload, epr_len_bytes=epr,
    )
