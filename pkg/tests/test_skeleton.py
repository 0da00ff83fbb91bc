"""Descriptors, sequence containers, bone lengths, resampling, augmentation."""

import numpy as np
import pytest

from jcskit import (
    KeypointSetDescriptor,
    MotionSequence,
    Pose,
    RigidTransform,
    StructuralError,
    bone_lengths,
    formats,
    get_format,
    register_format,
    resample,
    rotate_sequence,
    sample_rotation,
    skeleton_height,
)
from jcskit.errors import UnsupportedFormatError
from jcskit.geometry import axis_angle_matrix

from conftest import t_pose_sequence


class TestDescriptors:
    def test_builtin_formats_registered(self):
        assert formats() == ["coco17", "kinect25", "openpose25"]

    def test_tree_invariants_hold_for_builtins(self):
        for fid in formats():
            desc = get_format(fid)
            assert len(desc.bones) == desc.joint_count - 1
            parents = desc.parents()
            assert (parents == -1).sum() == 1

    def test_unknown_format_rejected(self):
        with pytest.raises(UnsupportedFormatError):
            get_format("vicon99")

    def test_disconnected_bones_rejected(self):
        with pytest.raises(StructuralError):
            KeypointSetDescriptor(
                id="bad", joint_names=("a", "b", "c"),
                bones=((0, 1), (0, 1)), canonical_map={"pelvis": 0},
            )

    def test_non_injective_map_rejected(self):
        with pytest.raises(StructuralError):
            KeypointSetDescriptor(
                id="bad2", joint_names=("a", "b"),
                bones=((0, 1),),
                canonical_map={"pelvis": 0, "spine_top": 0},
            )

    def test_custom_format_registration(self):
        desc = KeypointSetDescriptor(
            id="stick4", joint_names=("root", "mid", "l", "r"),
            bones=((0, 1), (1, 2), (1, 3)),
            canonical_map={"pelvis": 0, "spine_top": 1},
        )
        register_format(desc)
        assert get_format("stick4").joint_count == 4
        with pytest.raises(StructuralError):
            register_format(desc)

    def test_coco_synthesizes_pelvis(self):
        desc = get_format("coco17")
        assert desc.is_virtual("pelvis")
        pose = Pose(positions=np.arange(51, dtype=float).reshape(17, 3),
                    validity=np.ones(17, dtype=bool))
        positions, validity = desc.canonical_positions(pose)
        from jcskit.skeleton import ROLE_INDEX

        expected = 0.5 * (pose.positions[11] + pose.positions[12])
        assert np.allclose(positions[ROLE_INDEX["pelvis"]], expected)
        assert validity[ROLE_INDEX["pelvis"]]


class TestPose:
    def test_nan_positions_become_invalid(self):
        positions = np.zeros((17, 3))
        positions[4] = [np.nan, 0.0, 0.0]
        pose = Pose(positions=positions, validity=np.ones(17, dtype=bool))
        assert not pose.validity[4]
        assert np.isfinite(pose.positions).all()

    def test_all_invalid_pose_representable(self):
        pose = Pose(positions=np.zeros((25, 3)), validity=np.zeros(25, dtype=bool))
        assert pose.validity.sum() == 0

    def test_wrong_joint_count_rejected(self):
        desc = get_format("kinect25")
        with pytest.raises(StructuralError):
            MotionSequence(descriptor=desc, fps=30.0,
                           frames=(Pose(positions=np.zeros((24, 3)), validity=None),))

    def test_positions_immutable(self):
        pose = Pose(positions=np.zeros((25, 3)), validity=np.ones(25, dtype=bool))
        with pytest.raises(ValueError):
            pose.positions[0, 0] = 1.0


class TestBoneLengths:
    def test_constant_pose_exact_length(self):
        seq = t_pose_sequence("kinect25", n_frames=5)
        bl = bone_lengths(seq)
        assert bl.get((12, 13)) == pytest.approx(0.45)  # hip -> knee

    def test_median_resists_glitch(self):
        desc = get_format("kinect25")
        base = t_pose_sequence("kinect25", n_frames=5)
        pos = base.positions_array().copy()
        val = base.validity_array()
        deltas = [-0.01, 0.0, 0.01, 9.55, -0.0]  # one glitched frame
        for i, d in enumerate(deltas):
            pos[i, 13, 1] -= d
        seq = base.with_frames(pos, val)
        assert bone_lengths(seq).get((12, 13)) == pytest.approx(0.45 + 0.0, abs=1e-12)

    def test_never_covalid_bone_flagged_missing(self):
        base = t_pose_sequence("kinect25", n_frames=3)
        val = base.validity_array().copy()
        val[:, 13] = False
        seq = base.with_frames(base.positions_array(), val)
        bl = bone_lengths(seq)
        assert bl.get((12, 13)) == 0.0
        assert (12, 13) in bl.missing


class TestResample:
    def test_constant_sequence_stays_constant(self):
        seq = t_pose_sequence("kinect25", n_frames=7)
        out = resample(seq, 200)
        assert len(out) == 200
        assert np.allclose(out.positions_array(), seq.frames[0].positions[None, None][0])

    def test_two_frames_to_three_midpoint(self):
        base = t_pose_sequence("kinect25", n_frames=2)
        pos = base.positions_array().copy()
        pos[1] += 1.0
        seq = base.with_frames(pos, base.validity_array())
        out = resample(seq, 3)
        assert np.array_equal(out.frames[0].positions, seq.frames[0].positions)
        assert np.array_equal(out.frames[2].positions, seq.frames[1].positions)
        assert np.allclose(out.frames[1].positions,
                           0.5 * (seq.frames[0].positions + seq.frames[1].positions))

    def test_matching_length_bitwise_identity(self):
        rng = np.random.default_rng(2)
        base = t_pose_sequence("kinect25", n_frames=200)
        pos = base.positions_array() + rng.normal(size=(200, 25, 3))
        seq = base.with_frames(pos, base.validity_array())
        out = resample(seq, 200)
        assert all(
            np.array_equal(a.positions, b.positions)
            for a, b in zip(out.frames, seq.frames)
        )

    def test_endpoints_preserved_bitwise(self):
        rng = np.random.default_rng(3)
        base = t_pose_sequence("kinect25", n_frames=31)
        pos = base.positions_array() + rng.normal(size=(31, 25, 3))
        seq = base.with_frames(pos, base.validity_array())
        out = resample(seq, 200)
        assert np.array_equal(out.frames[0].positions, seq.frames[0].positions)
        assert np.array_equal(out.frames[-1].positions, seq.frames[-1].positions)

    def test_validity_conservative(self):
        base = t_pose_sequence("kinect25", n_frames=2)
        val = base.validity_array().copy()
        val[1, 3] = False
        seq = base.with_frames(base.positions_array(), val)
        out = resample(seq, 3)
        assert out.frames[0].validity[3]
        assert not out.frames[1].validity[3]  # between valid and invalid
        assert not out.frames[2].validity[3]

    def test_empty_sequence_rejected(self):
        desc = get_format("kinect25")
        seq = MotionSequence(descriptor=desc, fps=30.0, frames=())
        with pytest.raises(StructuralError):
            resample(seq, 200)

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        base = t_pose_sequence("kinect25", n_frames=13)
        pos = base.positions_array() + rng.normal(size=(13, 25, 3))
        seq = base.with_frames(pos, base.validity_array())
        once = resample(seq, 50)
        twice = resample(once, 50)
        assert all(
            np.array_equal(a.positions, b.positions)
            for a, b in zip(once.frames, twice.frames)
        )


class TestRotateSequence:
    def test_identity_is_noop(self):
        seq = t_pose_sequence("kinect25", n_frames=3)
        out = rotate_sequence(seq, RigidTransform.identity())
        assert np.allclose(out.positions_array(), seq.positions_array())

    def test_pi_about_y_is_involution(self):
        seq = t_pose_sequence("kinect25", n_frames=3)
        t = RigidTransform(rotation=axis_angle_matrix(np.array([0.0, 1.0, 0.0]), np.pi))
        out = rotate_sequence(rotate_sequence(seq, t), t)
        assert np.allclose(out.positions_array(), seq.positions_array(), atol=1e-12)

    def test_matches_pointwise_matmul_oracle(self):
        seq = t_pose_sequence("kinect25", n_frames=2)
        t = sample_rotation(0.8, seed=99)
        out = rotate_sequence(seq, t)
        # oracle: straightforward per-point matrix multiply
        for i, frame in enumerate(seq.frames):
            for j in range(25):
                expected = t.rotation @ frame.positions[j]
                assert np.allclose(out.frames[i].positions[j], expected, atol=1e-12)

    def test_preserves_pairwise_distances(self):
        seq = t_pose_sequence("kinect25", n_frames=1)
        t = sample_rotation(2.0, seed=5)
        out = rotate_sequence(seq, t)
        a = seq.frames[0].positions
        b = out.frames[0].positions
        da = np.linalg.norm(a[:, None] - a[None], axis=-1)
        db = np.linalg.norm(b[:, None] - b[None], axis=-1)
        assert np.allclose(da, db, rtol=1e-9)

    def test_scale_scales_bone_lengths(self):
        seq = t_pose_sequence("kinect25", n_frames=2)
        t = RigidTransform(rotation=np.eye(3), translation=np.zeros(3), scale=2.5)
        out = rotate_sequence(seq, t)
        a = bone_lengths(seq)
        b = bone_lengths(out)
        for bone, ln in a.lengths.items():
            if ln > 0:
                assert b.get(bone) == pytest.approx(2.5 * ln, rel=1e-9)

    def test_invalid_rotation_rejected(self):
        with pytest.raises(ValueError):
            RigidTransform(rotation=np.eye(3) * 1.001)


class TestSampleRotation:
    def test_zero_radians_identity(self):
        t = sample_rotation(0.0, seed=1)
        assert np.allclose(t.rotation, np.eye(3))

    def test_deterministic_per_seed(self):
        a = sample_rotation(0.8, seed=42)
        b = sample_rotation(0.8, seed=42)
        assert np.array_equal(a.rotation, b.rotation)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            sample_rotation(-0.1, seed=0)

    def test_angle_distribution_uniform(self):
        # chi-square against uniform over [-0.8, 0.8], deterministic seeds
        from scipy import stats

        angles = []
        for seed in range(4000):
            t = sample_rotation(0.8, seed=seed)
            cos = (np.trace(t.rotation) - 1.0) / 2.0
            angle = float(np.arccos(np.clip(cos, -1.0, 1.0)))
            angles.append(angle)  # unsigned angle in [0, 0.8]
        hist, _ = np.histogram(angles, bins=10, range=(0.0, 0.8))
        chi = stats.chisquare(hist)
        assert chi.pvalue > 0.01

    def test_height_positive(self):
        assert skeleton_height(t_pose_sequence()) > 1.0
