"""Command-line surface: convert, reconstruct, augment, validate, inspect, report.

Exit codes form a small taxonomy pipelines can branch on: 0 success,
1 data error (malformed values, unknown format, reconstruction gaps),
2 structural error (joint counts, broken trees, schema violations),
3 internal-consistency error (convention self-checks; these indicate bugs).

Diagnostics go to stderr as line-oriented ``LEVEL code message``.
The environment variable ``JCS_NUM_THREADS`` caps frame-level parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .angles import (
    AngleSequence,
    baseline_pair_labels,
    dot_product_baseline,
    sequence_to_angles,
)
from .errors import (
    DomainError,
    InternalConsistencyError,
    JcskitError,
    ParseError,
    ReconstructionGapError,
    StructuralError,
    UnsupportedFormatError,
)
from .geometry import sample_rotation
from .io import (
    DEFAULT_MIN_CONFIDENCE,
    angles_to_csv,
    dump_angles,
    dump_baseline,
    dump_sequence,
    dumps,
    parse_angles,
    parse_sequence,
)
from .reconstruct import angles_to_sequence, sequence_roundtrip_report
from .skeleton import formats as format_ids
from .skeleton import resample, rotate_sequence

EXIT_OK = 0
EXIT_DATA = 1
EXIT_STRUCTURAL = 2
EXIT_INTERNAL = 3

_ERROR_CODES = {
    ParseError: ("E_PARSE", EXIT_DATA),
    UnsupportedFormatError: ("E_FORMAT", EXIT_DATA),
    ReconstructionGapError: ("E_GAP", EXIT_DATA),
    DomainError: ("E_DOMAIN", EXIT_DATA),
    StructuralError: ("E_STRUCT", EXIT_STRUCTURAL),
    InternalConsistencyError: ("E_INTERNAL", EXIT_INTERNAL),
}


def _diag(level: str, code: str, message: str) -> None:
    print(f"{level} {code} {message}", file=sys.stderr)


def _classify(exc: Exception) -> tuple[str, int]:
    for klass, (code, exit_code) in _ERROR_CODES.items():
        if isinstance(exc, klass):
            return code, exit_code
    return "E_DATA", EXIT_DATA


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write(path: str | None, blob: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(blob)
        if not blob.endswith(b"\n"):
            sys.stdout.buffer.write(b"\n")
    else:
        Path(path).write_bytes(blob)


def _load_sequence(args) -> "MotionSequence":
    data = _read(args.input)
    return parse_sequence(data, format_hint=getattr(args, "format", None),
                          min_confidence=getattr(args, "min_confidence",
                                                 DEFAULT_MIN_CONFIDENCE))


_HINGE_OWNERS = ("left_elbow", "right_elbow", "left_knee", "right_knee")


def _to_anatomical(aseq: AngleSequence) -> AngleSequence:
    """Report hinge channels as pi - value (straight limb = 0) on output."""
    values = aseq.values.copy()
    for col, (owner, channel) in enumerate(aseq.layout):
        if owner in _HINGE_OWNERS and channel == "flexion":
            finite = np.isfinite(values[:, col])
            values[finite, col] = np.pi - values[finite, col]
    return AngleSequence(
        layout=aseq.layout, values=values, root_positions=aseq.root_positions,
        root_orientations=aseq.root_orientations, fps=aseq.fps,
        format_id=aseq.format_id, bone_lengths=aseq.bone_lengths,
    )


def _from_anatomical(aseq: AngleSequence) -> AngleSequence:
    return _to_anatomical(aseq)  # pi - x is an involution


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_convert(args) -> int:
    seq = _load_sequence(args)
    if args.resample is not None:
        seq = resample(seq, args.resample)
    if args.baseline:
        pairs_values = np.stack([
            dot_product_baseline(frame, seq.descriptor) for frame in seq.frames
        ]) if len(seq) else np.zeros((0, 0))
        labels = baseline_pair_labels(seq.descriptor)
        _write(args.output, dump_baseline(seq, pairs_values, labels))
        return EXIT_OK
    aseq = sequence_to_angles(seq)
    out = _to_anatomical(aseq) if args.anatomical else aseq
    blob = dump_angles(out, degrees=args.degrees)
    if args.anatomical:
        doc = json.loads(blob)
        doc["hinge_convention"] = "anatomical"
        blob = dumps(doc)
    _write(args.output, blob)
    if args.csv:
        Path(args.csv).write_bytes(angles_to_csv(out, degrees=args.degrees))
    return EXIT_OK


def _load_angles(path: str) -> AngleSequence:
    blob = _read(path)
    aseq = parse_angles(blob)
    doc = json.loads(blob)
    if doc.get("hinge_convention") == "anatomical":
        aseq = _from_anatomical(aseq)
    return aseq


def cmd_reconstruct(args) -> int:
    aseq = _load_angles(args.input)
    seq = angles_to_sequence(aseq, strict=True)
    _write(args.output, dump_sequence(seq))
    if args.verify:
        original = parse_sequence(_read(args.verify), format_hint=aseq.format_id)
        if len(original) != len(seq):
            raise StructuralError(
                f"verify file has {len(original)} frames, reconstruction has {len(seq)}"
            )
        worst = 0.0
        for a, b in zip(original.frames, seq.frames):
            both = a.validity & b.validity
            if both.any():
                worst = max(worst, float(np.max(
                    np.linalg.norm(a.positions[both] - b.positions[both], axis=1))))
        print(f"roundtrip max keypoint error: {worst:.3e}")
    return EXIT_OK


def cmd_augment(args) -> int:
    seq = _load_sequence(args)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem if args.input != "-" else "sequence"
    written = []
    for i in range(args.count):
        transform = sample_rotation(args.max_radians, seed=args.seed + i)
        rotated = rotate_sequence(seq, transform)
        path = outdir / f"{stem}_rot{i:03d}.json"
        path.write_bytes(dump_sequence(rotated))
        written.append((path, rotated))
    if args.check_invariance:
        reference = sequence_to_angles(seq).values
        worst = 0.0
        for path, rotated in written:
            values = sequence_to_angles(rotated).values
            both = np.isfinite(reference) & np.isfinite(values)
            if both.any():
                delta = np.abs(reference[both] - values[both])
                delta = np.minimum(delta, 2.0 * np.pi - delta)  # angles wrap at +-pi
                worst = max(worst, float(np.max(delta)))
        print(f"max per-channel angle deviation over {args.count} rotations: {worst:.3e}")
    for path, _ in written:
        print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    seq = _load_sequence(args)
    issues = []
    for i, frame in enumerate(seq.frames):
        bad = np.flatnonzero(~frame.validity)
        if bad.size:
            issues.append({"frame": i, "invalid_joints": bad.tolist()})
    report = {
        "format": seq.descriptor.id,
        "frames": len(seq),
        "joints": seq.descriptor.joint_count,
        "clean": not issues,
        "issues": issues,
    }
    _write(args.output, dumps(report))
    if issues:
        _diag("WARN", "W_INVALID", f"{len(issues)} frame(s) contain invalid joints")
        return EXIT_DATA
    return EXIT_OK


def cmd_inspect(args) -> int:
    seq = _load_sequence(args)
    val = seq.validity_array()
    from .angles import structural_layout
    from .skeleton import skeleton_height

    info = {
        "format": seq.descriptor.id,
        "frames": len(seq),
        "fps": seq.fps,
        "duration_seconds": len(seq) / seq.fps,
        "joints": seq.descriptor.joint_count,
        "valid_fraction": float(val.mean()) if val.size else 0.0,
        "skeleton_height": skeleton_height(seq),
        "angle_channels": len(structural_layout(seq.descriptor)),
    }
    _write(args.output, dumps(info))
    return EXIT_OK


def cmd_report(args) -> int:
    seq = _load_sequence(args)
    report = sequence_roundtrip_report(seq)
    _write(args.output, dumps(report))
    return EXIT_OK


def cmd_formats(args) -> int:
    _write(args.output, dumps({"formats": format_ids()}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_input_options(p, needs_format=True):
    p.add_argument("input", help="input file, or - for stdin")
    p.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
    if needs_format:
        p.add_argument("--format", default=None,
                       help="keypoint set id (required for CSV, overrides JSON hint)")
        p.add_argument("--min-confidence", type=float, default=DEFAULT_MIN_CONFIDENCE,
                       help="confidence below this marks a joint invalid (default 0.1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jcskit",
        description="Convert skeleton keypoints to biomechanical joint angles and back.",
    )
    parser.add_argument("--version", action="version", version=f"jcskit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="keypoints -> angle channels")
    _add_input_options(p)
    p.add_argument("--resample", type=int, default=None, metavar="N",
                   help="length-normalize to N frames before converting")
    p.add_argument("--degrees", action="store_true", help="write degrees instead of radians")
    p.add_argument("--anatomical", action="store_true",
                   help="report hinge flexion as pi - angle (straight limb = 0)")
    p.add_argument("--csv", default=None, metavar="PATH",
                   help="also write a flat CSV of the vectorized layout")
    p.add_argument("--baseline", action="store_true",
                   help="emit plain dot-product bone-pair angles instead")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("reconstruct", help="angle file -> keypoints")
    p.add_argument("input", help="angle JSON file, or - for stdin")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--verify", default=None, metavar="ORIGINAL",
                   help="compare against the original keypoint file")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("augment", help="emit rotated copies of a sequence")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--format", default=None)
    p.add_argument("--min-confidence", type=float, default=DEFAULT_MIN_CONFIDENCE)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--max-radians", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check-invariance", action="store_true",
                   help="convert original and copies, print max channel deviation")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("validate", help="structural checks; exit 0 iff clean")
    _add_input_options(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("inspect", help="print a summary of a keypoint file")
    _add_input_options(p)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("report", help="convert+reconstruct roundtrip report")
    _add_input_options(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("formats", help="list registered keypoint set ids")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_formats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "resample", None) is not None and args.resample < 1:
        _diag("ERROR", "E_ARGS", "--resample must be >= 1")
        return EXIT_DATA
    if getattr(args, "max_radians", 0.0) < 0:
        _diag("ERROR", "E_ARGS", "--max-radians must be >= 0")
        return EXIT_DATA
    try:
        return args.func(args)
    except JcskitError as exc:
        code, exit_code = _classify(exc)
        _diag("ERROR", code, str(exc))
        return exit_code
    except FileNotFoundError as exc:
        _diag("ERROR", "E_IO", str(exc))
        return EXIT_DATA
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _diag("ERROR", "E_DATA", str(exc))
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
