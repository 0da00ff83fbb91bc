"""Wire formats: keypoint JSON/CSV, angle JSON, 17-digit float round-trips."""

import json

import numpy as np
import pytest

from jcskit import (
    ParseError,
    StructuralError,
    UnsupportedFormatError,
    angles_to_csv,
    dump_angles,
    dump_sequence,
    parse_angles,
    parse_sequence,
    sequence_to_angles,
)
from jcskit.io import dumps

from conftest import random_format_sequence, t_pose_sequence


def make_json(format_id="coco17", n=10, j=17, fps=25.0, mutate=None):
    rng = np.random.default_rng(0)
    frames = rng.normal(size=(n, j, 3)).tolist()
    doc = {"format": format_id, "fps": fps, "frames": frames}
    if mutate:
        mutate(doc)
    return json.dumps(doc).encode()


class TestParseJson:
    def test_well_formed(self):
        seq = parse_sequence(make_json())
        assert seq.descriptor.id == "coco17"
        assert len(seq) == 10
        assert seq.fps == 25.0
        assert all(f.validity.all() for f in seq.frames)

    def test_nan_coordinate_invalidates_joint(self):
        def mutate(doc):
            doc["frames"][3][5][1] = float("nan")

        data = make_json(mutate=mutate).replace(b"NaN", b"null")
        seq = parse_sequence(data)
        assert not seq.frames[3].validity[5]
        assert seq.frames[3].validity[6]

    def test_wrong_joint_count_structural_error(self):
        def mutate(doc):
            doc["frames"][2] = doc["frames"][2][:-1]

        with pytest.raises(StructuralError):
            parse_sequence(make_json(mutate=mutate))

    def test_malformed_json_has_line(self):
        with pytest.raises(ParseError) as exc:
            parse_sequence(b'{"format": "coco17",\n "frames": [[ }')
        assert exc.value.line is not None

    def test_unknown_format(self):
        with pytest.raises(UnsupportedFormatError):
            parse_sequence(make_json(format_id="mystery99"))

    def test_confidence_threshold(self):
        def mutate(doc):
            doc["confidence"] = [[1.0] * 17 for _ in range(10)]
            doc["confidence"][0][2] = 0.05

        seq = parse_sequence(make_json(mutate=mutate))
        assert not seq.frames[0].validity[2]
        seq = parse_sequence(make_json(mutate=mutate), min_confidence=0.01)
        assert seq.frames[0].validity[2]

    def test_null_joint_invalid(self):
        def mutate(doc):
            doc["frames"][1][4] = None

        seq = parse_sequence(make_json(mutate=mutate))
        assert not seq.frames[1].validity[4]


class TestParseCsv:
    def test_roundtrip_grid(self):
        rows = ["frame,joint,x,y,z"]
        rng = np.random.default_rng(1)
        vals = rng.normal(size=(4, 17, 3))
        for f in range(4):
            for j in range(17):
                x, y, z = (float(v) for v in vals[f, j])
                rows.append(f"{f},{j},{x!r},{y!r},{z!r}")
        seq = parse_sequence("\n".join(rows).encode(), format_hint="coco17")
        assert len(seq) == 4
        assert np.allclose(seq.positions_array(), vals)

    def test_missing_row_invalidates(self):
        rows = ["frame,joint,x,y,z"]
        for j in range(16):  # joint 16 missing
            rows.append(f"0,{j},0.1,0.2,0.3")
        seq = parse_sequence("\n".join(rows).encode(), format_hint="coco17")
        assert not seq.frames[0].validity[16]

    def test_confidence_column(self):
        rows = ["frame,joint,x,y,z,confidence"]
        for j in range(17):
            rows.append(f"0,{j},0.1,0.2,0.3,{0.05 if j == 2 else 0.9}")
        seq = parse_sequence("\n".join(rows).encode(), format_hint="coco17")
        assert not seq.frames[0].validity[2]
        assert seq.frames[0].validity[3]

    def test_csv_needs_format(self):
        with pytest.raises(UnsupportedFormatError):
            parse_sequence(b"frame,joint,x,y,z\n0,0,1,2,3")

    def test_bad_header(self):
        with pytest.raises(ParseError):
            parse_sequence(b"a,b,c\n1,2,3", format_hint="coco17")

    def test_out_of_range_joint(self):
        with pytest.raises(StructuralError):
            parse_sequence(b"frame,joint,x,y,z\n0,40,1,2,3", format_hint="coco17")


class TestFloatSerialization:
    def test_17_digit_roundtrip(self):
        values = [0.1, 1.0 / 3.0, np.pi, 1e-300, -2.5e17, 7.0]
        blob = dumps({"v": values})
        back = json.loads(blob)
        assert back["v"] == values  # exact double round-trip

    def test_sequence_json_roundtrip_bitwise(self):
        rng = np.random.default_rng(9)
        seq = random_format_sequence(rng, "kinect25", n_frames=3)
        blob = dump_sequence(seq)
        back = parse_sequence(blob)
        assert np.array_equal(back.positions_array(), seq.positions_array())
        assert np.array_equal(back.validity_array(), seq.validity_array())
        assert back.fps == seq.fps

    def test_deterministic_output(self):
        rng = np.random.default_rng(10)
        seq = random_format_sequence(rng, "coco17", n_frames=2)
        assert dump_sequence(seq) == dump_sequence(seq)


class TestAngleFiles:
    def test_angle_json_roundtrip(self):
        rng = np.random.default_rng(11)
        seq = random_format_sequence(rng, "kinect25", n_frames=3)
        aseq = sequence_to_angles(seq)
        back = parse_angles(dump_angles(aseq))
        assert back.layout == aseq.layout
        assert back.format_id == "kinect25"
        a, b = aseq.values, back.values
        assert np.array_equal(np.isnan(a), np.isnan(b))
        both = np.isfinite(a)
        assert np.array_equal(a[both], b[both])
        assert np.array_equal(aseq.root_positions, back.root_positions)
        assert aseq.bone_lengths == back.bone_lengths

    def test_degrees_units_roundtrip(self):
        seq = t_pose_sequence("kinect25", n_frames=1)
        aseq = sequence_to_angles(seq)
        doc = json.loads(dump_angles(aseq, degrees=True))
        assert doc["units"] == "degrees"
        col = dict(zip(map(tuple, doc["layout"]), doc["frames"][0]))
        assert col[("right_shoulder", "abduction")] == pytest.approx(90.0)
        back = parse_angles(dump_angles(aseq, degrees=True))
        both = np.isfinite(aseq.values)
        assert np.allclose(back.values[both], aseq.values[both], atol=1e-12)

    def test_csv_export_header(self):
        seq = t_pose_sequence("kinect25", n_frames=2)
        aseq = sequence_to_angles(seq)
        text = angles_to_csv(aseq).decode()
        lines = text.strip().split("\n")
        assert lines[0].startswith("frame,spine.flexion,")
        assert len(lines) == 3

    def test_missing_key_rejected(self):
        with pytest.raises(StructuralError):
            parse_angles(b'{"format": "kinect25", "layout": [], "frames": []}')
