"""Shared fixtures: the canonical T-pose and an angle-space pose generator.

The T-pose fixture realizes the documented axis conventions exactly:
subject facing +x, up +y, left hip -> right hip along +z. All frames come
out axis-aligned, which pins every sign convention in the angle extractor.

Random poses are generated in angle space (random channels + lengths +
root) and realized through the reconstruction chain, which by construction
produces kinematically valid skeletons: the domain on which the
keypoints <-> angles mapping is exactly invertible.
"""

from __future__ import annotations

import numpy as np
import pytest

from jcskit import angles_to_canonical, get_format, structural_layout
from jcskit.geometry import axis_angle_matrix
from jcskit.skeleton import (
    KeypointSetDescriptor,
    MotionSequence,
    N_ROLES,
    Pose,
    ROLE_INDEX,
    canonical_segments,
)


def _set(positions, validity, role, xyz):
    positions[ROLE_INDEX[role]] = xyz
    validity[ROLE_INDEX[role]] = True


def t_pose_canonical(with_ears: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Canonical T-pose: arms straight out along +-z, legs straight down."""
    p = np.zeros((N_ROLES, 3))
    v = np.zeros(N_ROLES, dtype=bool)
    _set(p, v, "pelvis", (0.0, 1.0, 0.0))
    _set(p, v, "spine_mid", (0.0, 1.25, 0.0))
    _set(p, v, "spine_top", (0.0, 1.5, 0.0))
    _set(p, v, "head", (0.0, 1.75, 0.0))
    if with_ears:
        _set(p, v, "left_ear", (0.0, 1.75, -0.1))
        _set(p, v, "right_ear", (0.0, 1.75, 0.1))
    for side, s in (("left", -1.0), ("right", 1.0)):
        _set(p, v, f"{side}_shoulder", (0.0, 1.5, s * 0.2))
        _set(p, v, f"{side}_elbow", (0.0, 1.5, s * 0.5))
        _set(p, v, f"{side}_wrist", (0.0, 1.5, s * 0.75))
        _set(p, v, f"{side}_thumb", (0.0, 1.43, s * 0.75))
        _set(p, v, f"{side}_hip", (0.0, 1.0, s * 0.1))
        _set(p, v, f"{side}_knee", (0.0, 0.55, s * 0.1))
        _set(p, v, f"{side}_ankle", (0.0, 0.1, s * 0.1))
        _set(p, v, f"{side}_toes", (0.15, 0.1, s * 0.1))
    return p, v


@pytest.fixture
def t_pose():
    return t_pose_canonical()


def canonical_to_format(positions, validity, desc: KeypointSetDescriptor) -> Pose:
    """Scatter canonical roles into a format pose, filling unmapped joints.

    Unmapped joints get small deterministic offsets from the root so that
    files are fully populated; no angle channel reads them.
    """
    out = np.zeros((desc.joint_count, 3))
    val = np.zeros(desc.joint_count, dtype=bool)
    for role, idx in desc.canonical_map.items():
        r = ROLE_INDEX[role]
        if validity[r]:
            out[idx] = positions[r]
            val[idx] = True
    root = positions[ROLE_INDEX["pelvis"]]
    for idx in range(desc.joint_count):
        if not val[idx]:
            out[idx] = root + np.array([0.01, 0.02, 0.03]) * (idx + 1)
            val[idx] = True
    return Pose(positions=out, validity=val)


def t_pose_sequence(format_id: str = "kinect25", n_frames: int = 3, fps: float = 30.0):
    desc = get_format(format_id)
    p, v = t_pose_canonical(with_ears=True)
    frame = canonical_to_format(p, v, desc)
    return MotionSequence(descriptor=desc, fps=fps, frames=tuple([frame] * n_frames))


# ---------------------------------------------------------------------------
# Angle-space pose generator
# ---------------------------------------------------------------------------


def random_channel_values(rng: np.random.Generator, desc) -> dict[tuple[str, str], float]:
    values: dict[tuple[str, str], float] = {}
    for owner, channel in structural_layout(desc):
        kind = owner.split("_")[-1]
        if kind in ("shoulder", "hip"):
            if channel == "flexion":
                v = rng.uniform(-3.0, 3.0)
            elif channel == "abduction":
                v = rng.uniform(-1.3, 1.3)
            else:
                v = rng.uniform(-3.0, 3.0)
        elif kind in ("elbow", "knee"):
            v = rng.uniform(0.3, 2.8) if channel == "flexion" else rng.uniform(-3.0, 3.0)
        elif kind == "wrist":
            # the thumb lies in the wrist frame's yz plane by construction
            v = 0.0 if channel == "flexion" else rng.uniform(0.3, 2.8)
        elif kind == "ankle":
            v = rng.uniform(0.3, 2.8)
        elif owner == "neck":
            v = rng.uniform(-1.2, 1.2) if channel in ("flexion", "lateral") else rng.uniform(-3.0, 3.0)
        elif owner == "spine":
            v = rng.uniform(-1.2, 1.2) if channel in ("flexion", "lateral") else rng.uniform(-2.5, 2.5)
        else:  # pragma: no cover
            raise AssertionError(owner)
        values[(owner, channel)] = float(v)
    return values


def random_lengths(rng: np.random.Generator, desc) -> dict[str, float]:
    out = {
        f"{a}-{b}": float(rng.uniform(0.08, 0.5))
        for a, b in canonical_segments(desc)
    }
    # formats that synthesize the pelvis / shoulder center as midpoints can
    # only express symmetric girdles; keep generated poses inside their
    # canonical shape space
    if desc.is_virtual("pelvis") and "pelvis-left_hip" in out:
        out["pelvis-right_hip"] = out["pelvis-left_hip"]
    if desc.is_virtual("spine_top") and "spine_top-left_shoulder" in out:
        out["spine_top-right_shoulder"] = out["spine_top-left_shoulder"]
    return out


def random_root(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    axis = rng.normal(size=3)
    angle = rng.uniform(-np.pi, np.pi)
    return rng.normal(scale=2.0, size=3), axis_angle_matrix(axis, angle)


def random_canonical_pose(rng: np.random.Generator, format_id: str = "kinect25"):
    """Random valid pose: channels, lengths, root and the realized keypoints."""
    desc = get_format(format_id)
    values = random_channel_values(rng, desc)
    lengths = random_lengths(rng, desc)
    root_p, root_r = random_root(rng)
    positions, validity = angles_to_canonical(values, lengths, root_p, root_r, desc)
    return values, lengths, root_p, root_r, positions, validity


def random_format_sequence(
    rng: np.random.Generator,
    format_id: str = "kinect25",
    n_frames: int = 4,
    fps: float = 30.0,
) -> MotionSequence:
    """Random valid sequence of one subject: fixed lengths, per-frame pose."""
    desc = get_format(format_id)
    lengths = random_lengths(rng, desc)
    frames = []
    for _ in range(n_frames):
        values = random_channel_values(rng, desc)
        root_p, root_r = random_root(rng)
        positions, validity = angles_to_canonical(values, lengths, root_p, root_r, desc)
        frames.append(canonical_to_format(positions, validity, desc))
    return MotionSequence(descriptor=desc, fps=fps, frames=tuple(frames))
