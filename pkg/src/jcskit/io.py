"""On-disk formats: keypoint JSON/CSV, angle JSON, baseline JSON.

Keypoint JSON::

    {"format": "<id>", "fps": 30, "frames": [[[x, y, z], ...J], ...N],
     "confidence": [[c, ...J], ...N]}          # optional

A joint entry may be null, and coordinates may be null/NaN; both mark the
joint invalid for that frame, as does a confidence below the threshold.

Keypoint CSV has the header ``frame,joint,x,y,z[,confidence]`` with one row
per joint per frame; the format id travels out-of-band.

Angle JSON::

    {"format": "<id>", "fps": 30, "units": "radians",
     "layout": [["spine", "flexion"], ...],
     "frames": [[v_or_null, ...C], ...N],
     "root": {"position": [[x,y,z]_or_null, ...N],
              "orientation": [[[...3],[...3],[...3]]_or_null, ...N]},
     "bone_lengths": {"pelvis-left_hip": 0.1, ...}}

All floats are written with 17 significant digits, enough to round-trip an
IEEE-754 double exactly, and output is byte-deterministic.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math

import numpy as np

from .angles import AngleSequence
from .errors import ParseError, StructuralError, UnsupportedFormatError
from .skeleton import MotionSequence, Pose, get_format

DEFAULT_MIN_CONFIDENCE = 0.1


# ---------------------------------------------------------------------------
# Deterministic 17-significant-digit JSON writing
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            return "null"
        return format(v, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_fmt(v) for v in value) + "]"
    if isinstance(value, np.ndarray):
        return _fmt(value.tolist())
    if isinstance(value, dict):
        items = (f"{json.dumps(str(k))}:{_fmt(v)}" for k, v in value.items())
        return "{" + ",".join(items) + "}"
    raise TypeError(f"cannot serialize {type(value)!r}")


def dumps(document: dict) -> bytes:
    return _fmt(document).encode("utf-8")


# ---------------------------------------------------------------------------
# Keypoint sequences
# ---------------------------------------------------------------------------


def parse_sequence(
    data: bytes,
    format_hint: str | None = None,
    min_confidence: float = DEFAULT_MIN_CONFIDENCE,
) -> MotionSequence:
    """Parse keypoint JSON or CSV bytes into a MotionSequence."""
    head = data.lstrip()[:1]
    if head == b"{":
        return _parse_json(data, format_hint, min_confidence)
    return _parse_csv(data, format_hint, min_confidence)


def _parse_json(data: bytes, format_hint, min_confidence) -> MotionSequence:
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise ParseError(f"input is not UTF-8: {e}", offset=e.start) from e
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    format_id = doc.get("format", format_hint)
    if not format_id:
        raise UnsupportedFormatError("no keypoint format declared and no hint given")
    desc = get_format(format_id)
    fps = float(doc.get("fps", 30.0))
    frames_raw = doc.get("frames")
    if not isinstance(frames_raw, list):
        raise StructuralError("missing or non-array 'frames'")
    conf = doc.get("confidence")
    if conf is not None and len(conf) != len(frames_raw):
        raise StructuralError("'confidence' length does not match 'frames'")
    frames = []
    for i, frame in enumerate(frames_raw):
        if not isinstance(frame, list) or len(frame) != desc.joint_count:
            got = len(frame) if isinstance(frame, list) else type(frame).__name__
            raise StructuralError(
                f"frame {i}: expected {desc.joint_count} joints, got {got}"
            )
        pos = np.zeros((desc.joint_count, 3))
        val = np.ones(desc.joint_count, dtype=bool)
        for j, joint in enumerate(frame):
            if joint is None:
                val[j] = False
                continue
            if not isinstance(joint, list) or len(joint) != 3:
                raise StructuralError(f"frame {i} joint {j}: expected [x, y, z]")
            triple = [float("nan") if c is None else float(c) for c in joint]
            if not all(math.isfinite(c) for c in triple):
                val[j] = False
            else:
                pos[j] = triple
        if conf is not None:
            row = conf[i]
            if not isinstance(row, list) or len(row) != desc.joint_count:
                raise StructuralError(f"confidence row {i} has wrong length")
            val &= np.asarray(row, dtype=np.float64) >= min_confidence
        frames.append(Pose(positions=pos, validity=val))
    return MotionSequence(descriptor=desc, fps=fps, frames=tuple(frames))


def _parse_csv(data: bytes, format_hint, min_confidence) -> MotionSequence:
    if not format_hint:
        raise UnsupportedFormatError("CSV input needs an explicit format id")
    desc = get_format(format_hint)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"input is not UTF-8: {e}", offset=e.start) from e
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty CSV input", line=1) from None
    cols = [c.strip().lower() for c in header]
    if cols[:5] != ["frame", "joint", "x", "y", "z"]:
        raise ParseError("CSV header must be frame,joint,x,y,z[,confidence]", line=1)
    has_conf = len(cols) > 5 and cols[5] == "confidence"
    rows: dict[int, dict[int, tuple[float, float, float, float]]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            f = int(row[0])
            j = int(row[1])
            x, y, z = (float(row[k]) for k in (2, 3, 4))
            c = float(row[5]) if has_conf and len(row) > 5 and row[5].strip() else 1.0
        except (ValueError, IndexError) as e:
            raise ParseError(f"bad CSV row: {e}", line=lineno) from e
        if not 0 <= j < desc.joint_count:
            raise StructuralError(f"line {lineno}: joint index {j} out of range for {desc.id}")
        rows.setdefault(f, {})[j] = (x, y, z, c)
    if not rows:
        raise ParseError("CSV contains no data rows")
    frames = []
    for f in sorted(rows):
        pos = np.zeros((desc.joint_count, 3))
        val = np.zeros(desc.joint_count, dtype=bool)
        for j, (x, y, z, c) in rows[f].items():
            if all(math.isfinite(v) for v in (x, y, z)) and c >= min_confidence:
                pos[j] = (x, y, z)
                val[j] = True
        frames.append(Pose(positions=pos, validity=val))
    return MotionSequence(descriptor=desc, fps=30.0, frames=tuple(frames))


def dump_sequence(seq: MotionSequence) -> bytes:
    frames = []
    for frame in seq.frames:
        frames.append([
            frame.positions[j].tolist() if frame.validity[j] else None
            for j in range(frame.joint_count)
        ])
    return dumps({"format": seq.descriptor.id, "fps": seq.fps, "frames": frames})


# ---------------------------------------------------------------------------
# Angle sequences
# ---------------------------------------------------------------------------


def dump_angles(aseq: AngleSequence, degrees: bool = False) -> bytes:
    scale = 180.0 / math.pi if degrees else 1.0
    frames = []
    for i in range(len(aseq)):
        row = aseq.values[i]
        frames.append([float(v) * scale if np.isfinite(v) else None for v in row])
    root_pos = []
    root_orient = []
    for i in range(len(aseq)):
        if np.isfinite(aseq.root_positions[i]).all():
            root_pos.append(aseq.root_positions[i].tolist())
            root_orient.append(aseq.root_orientations[i].tolist())
        else:
            root_pos.append(None)
            root_orient.append(None)
    return dumps({
        "format": aseq.format_id,
        "fps": aseq.fps,
        "units": "degrees" if degrees else "radians",
        "layout": [list(k) for k in aseq.layout],
        "frames": frames,
        "root": {"position": root_pos, "orientation": root_orient},
        "bone_lengths": dict(sorted(aseq.bone_lengths.items())),
    })


def parse_angles(data: bytes) -> AngleSequence:
    try:
        doc = json.loads(data.decode("utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", line=e.lineno) from e
    for key in ("format", "layout", "frames", "root", "bone_lengths"):
        if key not in doc:
            raise StructuralError(f"angle file is missing {key!r}")
    layout = tuple((str(a), str(b)) for a, b in doc["layout"])
    n = len(doc["frames"])
    c = len(layout)
    scale = math.pi / 180.0 if doc.get("units") == "degrees" else 1.0
    values = np.full((n, c), np.nan)
    for i, row in enumerate(doc["frames"]):
        if len(row) != c:
            raise StructuralError(f"angle frame {i} has {len(row)} values, layout has {c}")
        for k, v in enumerate(row):
            if v is not None:
                values[i, k] = float(v) * scale
    root = doc["root"]
    pos_raw = root.get("position")
    orient_raw = root.get("orientation")
    if not isinstance(pos_raw, list) or len(pos_raw) != n:
        raise StructuralError("root.position must have one entry per frame")
    if not isinstance(orient_raw, list) or len(orient_raw) != n:
        raise StructuralError("root.orientation must have one entry per frame")
    root_pos = np.full((n, 3), np.nan)
    root_orient = np.full((n, 3, 3), np.nan)
    for i in range(n):
        if pos_raw[i] is not None and orient_raw[i] is not None:
            root_pos[i] = np.asarray(pos_raw[i], dtype=np.float64)
            root_orient[i] = np.asarray(orient_raw[i], dtype=np.float64)
    return AngleSequence(
        layout=layout,
        values=values,
        root_positions=root_pos,
        root_orientations=root_orient,
        fps=float(doc.get("fps", 30.0)),
        format_id=str(doc["format"]),
        bone_lengths={str(k): float(v) for k, v in doc["bone_lengths"].items()},
    )


def angles_to_csv(aseq: AngleSequence, degrees: bool = False) -> bytes:
    """Flat CSV export of the vectorized layout (one column per channel)."""
    scale = 180.0 / math.pi if degrees else 1.0
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame"] + [f"{owner}.{channel}" for owner, channel in aseq.layout])
    for i in range(len(aseq)):
        row: list[str] = [str(i)]
        for v in aseq.values[i]:
            row.append(format(float(v) * scale, ".17g") if np.isfinite(v) else "")
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Dot-product baseline files
# ---------------------------------------------------------------------------


def dump_baseline(
    seq: MotionSequence,
    values: np.ndarray,
    labels: list[tuple[str, str]],
) -> bytes:
    frames = [[float(v) if np.isfinite(v) else None for v in row] for row in values]
    return dumps({
        "format": seq.descriptor.id,
        "fps": seq.fps,
        "units": "radians",
        "layout": [list(pair) for pair in labels],
        "frames": frames,
    })
