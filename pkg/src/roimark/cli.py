"""Operator commands: embed, verify, recover, tamper, metrics, report.

Images are binary PGM (P5, maxval 255).  Every command emits one
self-describing key-value report document with a stable field order, to
stdout and optionally to ``--report FILE``; identical inputs and seeds
produce byte-identical outputs.

Exit codes: 0 success/authentic, 1 tamper detected, 2 usage or config
error, 3 capacity or key error, 4 I/O or format error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .auth import BlockMapKey, _is_prime
from .engine import embed, recover, verify
from .errors import (
    BadVersion,
    CapacityExceeded,
    DimensionMismatch,
    EmptyKey,
    FileFormatError,
    InsufficientRoni,
    KeyInvalid,
    NonAsciiEpr,
    OutOfBounds,
    RoiNotTileable,
    RoiOutOfBounds,
    TooSmall,
    WatermarkError,
)
from .image import GrayImage, RoiRect, segment
from .metrics import measure, mssim, psnr
from .pgm import read_pgm, write_pgm
from .tamper import TamperSpec, apply_tamper

EXIT_OK = 0
EXIT_TAMPERED = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3
EXIT_IO = 4

REPORT_VERSION = 1


@dataclass(frozen=True)
class JobConfig:
    """Validated command inputs; numbers in reports are always recomputed."""

    input: str
    output: str | None = None
    roi: RoiRect | None = None
    epr_path: str | None = None
    k1: str | None = None
    k: int | None = None
    seed: int = 0
    report_path: str | None = None

    @classmethod
    def from_args(cls, args) -> "JobConfig":
        return cls(
            input=getattr(args, "infile", None),
            output=getattr(args, "outfile", None),
            roi=getattr(args, "roi", None),
            epr_path=getattr(args, "epr", None),
            k1=getattr(args, "k1", None),
            k=getattr(args, "k", None),
            seed=getattr(args, "seed", 0) or 0,
            report_path=getattr(args, "report", None),
        )

    def load_image(self) -> GrayImage:
        image = read_pgm(self.input)
        if self.roi is not None:
            self.roi.validate_in(image.width, image.height)
        return image

    def read_epr(self) -> bytes:
        if self.epr_path is None:
            return b""
        return Path(self.epr_path).read_bytes()


def _parse_roi(text: str) -> RoiRect:
    try:
        x, y, w, h = (int(v) for v in text.split(","))
        return RoiRect(x, y, w, h)
    except (ValueError, RoiOutOfBounds, RoiNotTileable) as exc:
        raise argparse.ArgumentTypeError(f"bad --roi '{text}': {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else f"{value:.4f}"
    if isinstance(value, bytes):
        return json.dumps(value.decode("latin-1"))
    if isinstance(value, (list, tuple)):
        return " ".join(_fmt(v) for v in value)
    return str(value)


def _emit(lines: list[tuple[str, object]], report_path: str | None) -> None:
    text = "".join(f"{k}: {_fmt(v)}\n" for k, v in lines)
    sys.stdout.write(text)
    if report_path:
        Path(report_path).write_text(text, encoding="ascii", errors="backslashreplace")


def _report_head(command: str, cfg: JobConfig) -> list[tuple[str, object]]:
    lines: list[tuple[str, object]] = [("report_version", REPORT_VERSION), ("command", command)]
    if cfg.input:
        lines.append(("input", cfg.input))
    if cfg.output:
        lines.append(("output", cfg.output))
    return lines


def cmd_embed(args) -> int:
    cfg = JobConfig.from_args(args)
    image = cfg.load_image()
    result = embed(image, cfg.roi, cfg.read_epr(), cfg.k1, cfg.k)
    write_pgm(cfg.output, result.watermarked)
    lines = _report_head("embed", cfg)
    lines += [
        ("roi", ",".join(map(str, cfg.roi.as_tuple()))),
        ("epr_bytes", result.header.epr_len_bytes),
        ("w_bits", result.stats.w_bits),
        ("w_comp_bits", result.stats.w_comp_bits),
        ("compression_ratio", f"{result.stats.compression_ratio:.6f}"),
        ("payload_len_bits", result.header.payload_len_bits),
        ("roi_blocks", result.stats.roi_blocks),
        ("roni_blocks_used", result.stats.roni_blocks_used),
        ("psnr_db", result.stats.psnr_db),
        ("mssim", mssim(image, result.watermarked)),
    ]
    _emit(lines, cfg.report_path)
    return EXIT_OK


def _verification_lines(report) -> list[tuple[str, object]]:
    header = report.header
    lines = [
        ("header_readable", True),
        ("roi", f"{header.roi_x},{header.roi_y},{header.roi_w},{header.roi_h}"),
        ("payload_len_bits", header.payload_len_bits),
        ("payload_state", report.payload_state.value),
        ("authentic", report.authentic),
        ("epr_bytes", header.epr_len_bytes if report.epr is not None else 0),
        ("epr", report.epr if report.epr is not None else "UNRECOVERABLE"),
        ("tampered_block_count", len(report.tampered_blocks)),
        ("tampered_blocks", list(report.tampered_blocks)),
        ("block_comparisons", report.block_comparisons),
    ]
    return lines


def _unreadable_lines(exc: Exception) -> list[tuple[str, object]]:
    return [
        ("header_readable", False),
        ("authentic", False),
        ("error", str(exc)),
    ]


def _write_epr(args, report) -> None:
    dest = getattr(args, "epr_out", None)
    if dest and report.epr is not None:
        Path(dest).write_bytes(report.epr)


def cmd_verify(args) -> int:
    cfg = JobConfig.from_args(args)
    image = cfg.load_image()
    lines = _report_head("verify", cfg)
    try:
        report = verify(image, cfg.k1, cfg.k)
    except (BadVersion, RoiOutOfBounds) as exc:
        _emit(lines + _unreadable_lines(exc), cfg.report_path)
        return EXIT_TAMPERED
    _write_epr(args, report)
    _emit(lines + _verification_lines(report), cfg.report_path)
    return EXIT_OK if report.authentic else EXIT_TAMPERED


def cmd_recover(args) -> int:
    cfg = JobConfig.from_args(args)
    image = cfg.load_image()
    lines = _report_head("recover", cfg)
    try:
        recovered, report = recover(image, cfg.k1, cfg.k)
    except (BadVersion, RoiOutOfBounds) as exc:
        _emit(lines + _unreadable_lines(exc), cfg.report_path)
        return EXIT_TAMPERED
    write_pgm(cfg.output, recovered.image)
    _write_epr(args, report)
    lines += _verification_lines(report)
    lines += [
        ("recovered_block_count", len(recovered.recovered_blocks)),
        ("recovered_blocks", [f"{i}:{v}" for i, v in recovered.recovered_blocks]),
        ("recovery_caveat", report.caveat),
    ]
    _emit(lines, cfg.report_path)
    return EXIT_OK if report.authentic else EXIT_TAMPERED


def cmd_tamper(args) -> int:
    cfg = JobConfig.from_args(args)
    image = cfg.load_image()
    spec = TamperSpec.from_json(Path(args.tamper_spec).read_text())
    if args.seed is not None:
        spec = TamperSpec(
            regions=spec.regions, mode=spec.mode, value=spec.value, seed=args.seed
        )
    region_map = segment(image, cfg.roi)
    result = apply_tamper(image, region_map, spec)
    write_pgm(cfg.output, result.image)
    lines = _report_head("tamper", cfg)
    lines += [
        ("roi", ",".join(map(str, cfg.roi.as_tuple()))),
        ("mode", spec.mode),
        ("seed", spec.seed),
        ("regions", [",".join(map(str, r)) for r in spec.regions]),
        ("touched_block_count", len(result.touched_blocks)),
        ("touched_blocks", list(result.touched_blocks)),
        ("changed_block_count", len(result.changed_blocks)),
        ("changed_blocks", list(result.changed_blocks)),
    ]
    _emit(lines, cfg.report_path)
    return EXIT_OK


def cmd_metrics(args) -> int:
    cfg = JobConfig.from_args(args)
    a = read_pgm(cfg.input)
    b = read_pgm(args.ref)
    score = measure(a, b)
    lines = _report_head("metrics", cfg)
    lines += [("reference", args.ref), ("psnr_db", score.psnr_db), ("mssim", score.mssim)]
    _emit(lines, cfg.report_path)
    return EXIT_OK


def _mult4(v: int) -> int:
    return max(4, (v // 4) * 4)


def _auto_roi(image: GrayImage, fraction: float) -> RoiRect:
    w = _mult4(int((image.width - 6) * fraction))
    h = _mult4(int((image.height - 6) * fraction))
    return RoiRect((image.width - w) // 2, (image.height - h) // 2, w, h)


def _pick_k(requested: int | None, n_blocks: int) -> int:
    if requested is not None:
        try:
            BlockMapKey(k=requested, n_roi_blocks=n_blocks)
            return requested
        except KeyInvalid:
            pass
    for k in range(2, n_blocks):
        if _is_prime(k) and math.gcd(k, n_blocks) == 1:
            return k
    raise KeyInvalid(f"no valid mapping key exists for {n_blocks} blocks")


def _default_epr() -> bytes:
    head = (
        "PATIENT-ID: 0000001; NAME: ANONYMIZED; DOB: 1970-01-01; "
        "MODALITY: SYNTHETIC; STUDY: WATERMARK EVALUATION; NOTES: "
    )
    return (head + "." * (512 - len(head))).encode("ascii")


def _report_one(path: Path, args, epr: bytes, epr_fixed: bool) -> dict:
    """embed -> tamper -> verify -> recover for a single corpus image."""
    image = read_pgm(path)
    fractions = [0.6, 0.5, 0.4, 0.3] if args.roi is None else [None]
    last_error: Exception | None = None
    for fraction in fractions:
        roi = args.roi if fraction is None else _auto_roi(image, fraction)
        if epr_fixed:
            epr_use = epr
        else:
            # trim the synthetic record to what the region can plausibly carry
            epr_use = epr[: max(0, (roi.area // 4 - 320) // 16)]
        try:
            roi.validate_in(image.width, image.height)
            rmap = segment(image, roi)
            k = _pick_k(args.k, rmap.n_roi_blocks)
            result = embed(image, roi, epr_use, args.k1, k)
        except (CapacityExceeded, InsufficientRoni, KeyInvalid, RoiOutOfBounds) as exc:
            last_error = exc
            continue
        marked = result.watermarked

        side = max(8, min(roi.w, roi.h) // 4)
        region = (roi.x + roi.w // 3, roi.y + roi.h // 3, side, side)
        spec = TamperSpec(regions=(region,), mode="random", seed=args.seed)
        attacked = apply_tamper(marked, rmap, spec)

        report = verify(attacked.image, args.k1, k)
        recovered, _ = recover(attacked.image, args.k1, k)
        roi_slice = np.s_[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w]
        return {
            "image": path.name,
            "size": f"{image.width}x{image.height}",
            "roi_size": f"{roi.w}x{roi.h}",
            "w_bits": result.stats.w_bits,
            "w_comp_bits": result.stats.w_comp_bits,
            "roi_blocks": result.stats.roi_blocks,
            "psnr_db": result.stats.psnr_db,
            "mssim": mssim(image, marked),
            "flagged_match": set(report.tampered_blocks) == set(attacked.changed_blocks),
            "recovered_roi_psnr_db": psnr(
                image.pixels[roi_slice], recovered.image.pixels[roi_slice]
            ),
        }
    return {"image": path.name, "error": str(last_error)}


def cmd_report(args) -> int:
    corpus = sorted(Path(args.corpus).glob("*.pgm"))
    if not corpus:
        print(f"error: no .pgm images under {args.corpus}", file=sys.stderr)
        return EXIT_IO
    epr = Path(args.epr).read_bytes() if args.epr else _default_epr()

    rows = [_report_one(path, args, epr, epr_fixed=bool(args.epr)) for path in corpus]
    lines: list[tuple[str, object]] = [
        ("report_version", REPORT_VERSION),
        ("command", "report"),
        ("corpus", args.corpus),
        ("images", len(corpus)),
    ]
    for row in rows:
        lines.append(("image", row["image"]))
        if "error" in row:
            lines.append(("error", row["error"]))
            continue
        for field in (
            "size", "roi_size", "w_bits", "w_comp_bits", "roi_blocks",
            "psnr_db", "mssim", "flagged_match", "recovered_roi_psnr_db",
        ):
            lines.append((field, row[field]))
    _emit(lines, args.report)

    widths = (20, 10, 9, 8, 12, 10, 8, 7)
    heads = ("image", "size", "roi", "w_bits", "w_comp_bits", "roi_blocks", "psnr_db", "mssim")
    print("".join(h.ljust(w) for h, w in zip(heads, widths)))
    for row in rows:
        if "error" in row:
            print(f"{row['image'].ljust(20)}error: {row['error']}")
            continue
        cells = (
            row["image"], row["size"], row["roi_size"], str(row["w_bits"]),
            str(row["w_comp_bits"]), str(row["roi_blocks"]),
            _fmt(row["psnr_db"]), _fmt(row["mssim"]),
        )
        print("".join(str(c).ljust(w) for c, w in zip(cells, widths)))
    failed = [r for r in rows if "error" in r]
    return EXIT_IO if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roimark",
        description="Fragile block-based ROI watermarking for 8-bit grayscale PGM images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, infile=True, outfile=False, keys=False, roi=False):
        if infile:
            p.add_argument("--in", dest="infile", required=True, help="input PGM image")
        if outfile:
            p.add_argument("--out", dest="outfile", required=True, help="output PGM image")
        if keys:
            p.add_argument("--k1", required=True, help="watermark encryption key (text)")
            p.add_argument("--k", type=int, required=True, help="block mapping key (prime)")
        if roi:
            p.add_argument("--roi", type=_parse_roi, required=True, metavar="X,Y,W,H")
        p.add_argument("--report", help="also write the report document to this file")

    p = sub.add_parser("embed", help="embed patient data and recovery info")
    add_common(p, outfile=True, keys=True, roi=True)
    p.add_argument("--epr", help="ASCII patient record file to embed")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("verify", help="check ROI integrity and localize tampering")
    add_common(p, keys=True)
    p.add_argument("--epr-out", dest="epr_out", help="write the extracted patient record here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("recover", help="verify, then rebuild tampered blocks from stored averages")
    add_common(p, outfile=True, keys=True)
    p.add_argument("--epr-out", dest="epr_out", help="write the extracted patient record here")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("tamper", help="apply a declared tamper and emit its ground truth")
    add_common(p, outfile=True, roi=True)
    p.add_argument("--tamper-spec", dest="tamper_spec", required=True, help="JSON tamper spec")
    p.add_argument("--seed", type=int, default=None,
                   help="override the random seed from the tamper file")
    p.set_defaults(func=cmd_tamper)

    p = sub.add_parser("metrics", help="PSNR and MSSIM between two images")
    add_common(p)
    p.add_argument("--ref", required=True, help="reference PGM image")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("report", help="embed/tamper/verify/recover over a corpus, tabulated")
    p.add_argument("--corpus", required=True, help="directory of .pgm images")
    p.add_argument("--k1", required=True)
    p.add_argument("--k", type=int, default=None, help="mapping key; auto-adjusted when invalid")
    p.add_argument("--roi", type=_parse_roi, default=None, metavar="X,Y,W,H",
                   help="fixed ROI for all images (default: auto-sized per image)")
    p.add_argument("--epr", help="patient record file (default: a 512-byte synthetic record)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="also write the report document to this file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (KeyInvalid, InsufficientRoni, CapacityExceeded, EmptyKey) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (RoiNotTileable, RoiOutOfBounds, OutOfBounds, NonAsciiEpr,
            DimensionMismatch, TooSmall, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except WatermarkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
