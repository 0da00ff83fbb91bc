"""Rebuild keypoints from angle channels, bone lengths and the root pose.

Forward kinematics walks the canonical tree from the pelvis: every joint
frame is rebuilt by composing the documented alignment rotations with the
measured axial twist, every bone direction by inverting the channel
formulas, and child positions accumulate as parent + length * direction.

The canonical skeleton this realizes is rigid in the ways the channels
cannot see: the hip girdle runs through the pelvis along the root z axis,
the shoulder girdle through the top of the spine, spine segments attach
perpendicular to their girdles, and ears sit symmetrically on the ear line.
Poses generated by this chain round-trip through the angle extractor
exactly; arbitrary noisy poses come back as their projection onto that
canonical shape, which is what the roundtrip report quantifies.

Keypoints no channel determines (format extras like COCO's nose, plus feet
with a separate heel keypoint) are emitted invalid and listed as
unreconstructable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import (
    AngleSequence,
    align_hinge,
    align_spherical_z,
    inverse_spherical_x,
    inverse_spherical_z,
    sequence_to_angles,
    spine_rotation,
    structural_layout,
)
from .errors import DomainError, ReconstructionGapError, StructuralError
from .frames import Frame3
from .geometry import is_rotation, rot_y, safe_unit
from .skeleton import (
    KeypointSetDescriptor,
    MotionSequence,
    N_ROLES,
    Pose,
    ROLE_INDEX,
    skeleton_height,
)

_MIRROR = np.diag([1.0, 1.0, -1.0])


@dataclass(frozen=True)
class FkStep:
    """One joint of the kinematic chain: what it needs and what it places."""

    role: str
    parent: str
    bone_key: str
    channels: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class FkChain:
    """Topologically ordered reconstruction recipe for one format."""

    descriptor_id: str
    steps: tuple[FkStep, ...]

    def required_lengths(self) -> set[str]:
        return {s.bone_key for s in self.steps}


def build_chain(desc: KeypointSetDescriptor) -> FkChain:
    """Chain of canonical joints this format can reconstruct."""
    layout = set(structural_layout(desc))
    has = desc.has_role
    steps: list[FkStep] = []

    def add(role, parent, bone_key, channels):
        if all(ch in layout for ch in channels) and has(role):
            steps.append(FkStep(role, parent, bone_key, tuple(channels)))

    if ("spine", "lateral") not in layout:
        return FkChain(descriptor_id=desc.id, steps=())
    add("left_hip", "pelvis", "pelvis-left_hip", ())
    add("right_hip", "pelvis", "pelvis-right_hip", ())
    if ("spine", "flexion") in layout:
        add("spine_mid", "pelvis", "pelvis-spine_mid", ())
        add("spine_top", "spine_mid", "spine_mid-spine_top",
            [("spine", "flexion"), ("spine", "lateral"), ("spine", "axial")])
    else:
        add("spine_top", "pelvis", "pelvis-spine_top",
            [("spine", "lateral"), ("spine", "axial")])
    add("left_shoulder", "spine_top", "spine_top-left_shoulder", ())
    add("right_shoulder", "spine_top", "spine_top-right_shoulder", ())
    add("head", "spine_top", "spine_top-head",
        [("neck", "flexion"), ("neck", "lateral"), ("neck", "axial")])
    if ("neck", "flexion") in layout:
        add("left_ear", "head", "head-left_ear", [("neck", "axial")])
        add("right_ear", "head", "head-right_ear", [("neck", "axial")])
    for side in ("left", "right"):
        add(f"{side}_elbow", f"{side}_shoulder", f"{side}_shoulder-{side}_elbow",
            [(f"{side}_shoulder", "flexion"), (f"{side}_shoulder", "abduction")])
        add(f"{side}_wrist", f"{side}_elbow", f"{side}_elbow-{side}_wrist",
            [(f"{side}_shoulder", "axial"), (f"{side}_elbow", "flexion")])
        add(f"{side}_thumb", f"{side}_wrist", f"{side}_wrist-{side}_thumb",
            [(f"{side}_elbow", "axial"), (f"{side}_wrist", "flexion"),
             (f"{side}_wrist", "lateral")])
        add(f"{side}_knee", f"{side}_hip", f"{side}_hip-{side}_knee",
            [(f"{side}_hip", "flexion"), (f"{side}_hip", "abduction")])
        add(f"{side}_ankle", f"{side}_knee", f"{side}_knee-{side}_ankle",
            [(f"{side}_hip", "axial"), (f"{side}_knee", "flexion")])
        if not has(f"{side}_foot_base"):
            add(f"{side}_toes", f"{side}_ankle", f"{side}_ankle-{side}_toes",
                [(f"{side}_knee", "axial"), (f"{side}_ankle", "flexion")])
    return FkChain(descriptor_id=desc.id, steps=tuple(steps))


def unreconstructable_joints(desc: KeypointSetDescriptor) -> list[str]:
    """Format joint names no angle channel can place."""
    chain = build_chain(desc)
    placeable = {s.role for s in chain.steps} | {"pelvis"}
    recon_indices = {desc.canonical_map[r] for r in placeable if r in desc.canonical_map}
    return [name for idx, name in enumerate(desc.joint_names) if idx not in recon_indices]


# ---------------------------------------------------------------------------
# Single-pose forward kinematics
# ---------------------------------------------------------------------------


class _FkBuilder:
    """Mutable state of one forward-kinematics pass."""

    def __init__(self, values, lengths, desc, strict):
        self.values = values
        self.lengths = lengths
        self.desc = desc
        self.strict = strict
        self.positions = np.zeros((N_ROLES, 3))
        self.validity = np.zeros(N_ROLES, dtype=bool)
        self.blocking: list[str] = []

    def channel(self, owner: str, name: str) -> float | None:
        v = self.values.get((owner, name))
        if v is None or not np.isfinite(v):
            return None
        return float(v)

    def hinge(self, owner: str) -> float | None:
        v = self.channel(owner, "flexion")
        if v is None:
            return None
        if not -1e-9 <= v <= np.pi + 1e-9:
            raise DomainError(f"{owner}.flexion = {v!r} outside the hinge domain [0, pi]")
        return float(np.clip(v, 0.0, np.pi))

    def length(self, key: str) -> float | None:
        ln = self.lengths.get(key)
        if ln is None:
            if self.strict:
                self.blocking.append(key)
            return None
        return float(ln)

    def place(self, role: str, point: np.ndarray) -> None:
        if self.desc.has_role(role):
            idx = ROLE_INDEX[role]
            self.positions[idx] = point
            self.validity[idx] = True

    def pos(self, role: str) -> np.ndarray | None:
        idx = ROLE_INDEX[role]
        return self.positions[idx] if self.validity[idx] else None


def angles_to_canonical(
    values: dict[tuple[str, str], float],
    lengths: dict[str, float],
    root_position: np.ndarray,
    root_orientation: np.ndarray,
    desc: KeypointSetDescriptor,
    strict: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Canonical-role positions and validity implied by one angle vector.

    Channels that are absent for this frame mask the affected subtree. With
    strict=True, a bone length missing for a step whose channels are present
    raises ReconstructionGapError naming the blocking segments.
    """
    root_orientation = np.asarray(root_orientation, dtype=np.float64)
    root_position = np.asarray(root_position, dtype=np.float64)
    if not is_rotation(root_orientation, tol=1e-9):
        raise StructuralError("root orientation is not a proper rotation matrix")
    layout = set(structural_layout(desc))
    if ("spine", "lateral") not in layout:
        raise ReconstructionGapError(
            f"format {desc.id!r} lacks the torso channels reconstruction needs",
            blocking=["spine"],
        )

    b = _FkBuilder(values, lengths, desc, strict)
    b.place("pelvis", root_position)
    lower = Frame3(axes=root_orientation, origin=root_position, handedness=1.0)

    for side, sign in (("left", -1.0), ("right", 1.0)):
        ln = b.length(f"pelvis-{side}_hip") if desc.has_role(f"{side}_hip") else None
        if ln is not None:
            b.place(f"{side}_hip", root_position + sign * ln * lower.z)

    upper = _rebuild_torso(b, lower)
    if upper is not None:
        for side, sign in (("left", -1.0), ("right", 1.0)):
            ln = b.length(f"spine_top-{side}_shoulder") if desc.has_role(f"{side}_shoulder") else None
            if ln is not None:
                b.place(f"{side}_shoulder", upper.origin + sign * ln * upper.z)
        _rebuild_head(b, upper)
        for side in ("left", "right"):
            _rebuild_arm(b, upper, side)
    for side in ("left", "right"):
        _rebuild_leg(b, lower, side)

    if b.blocking:
        raise ReconstructionGapError(
            "missing bone lengths block reconstruction: "
            + ", ".join(sorted(set(b.blocking))),
            blocking=sorted(set(b.blocking)),
        )
    return b.positions, b.validity


def _rebuild_torso(b: _FkBuilder, lower: Frame3) -> Frame3 | None:
    lat = b.channel("spine", "lateral")
    ax = b.channel("spine", "axial")
    if b.desc.has_role("spine_mid"):
        flex = b.channel("spine", "flexion")
        ln_mid = b.length("pelvis-spine_mid")
        if ln_mid is not None:
            b.place("spine_mid", lower.origin + ln_mid * lower.y)
        mid = b.pos("spine_mid")
        ln_top = b.length("spine_mid-spine_top")
        if None in (flex, lat, ax) or mid is None or ln_top is None:
            return None
        upper = lower.rotated_locally(spine_rotation(flex, lat, ax, mid_spine_present=True))
        top = mid + ln_top * upper.y
        b.place("spine_top", top)
        return upper.with_origin(top)
    ln_top = b.length("pelvis-spine_top")
    if None in (lat, ax) or ln_top is None:
        return None
    upper = lower.rotated_locally(spine_rotation(None, lat, ax, mid_spine_present=False))
    top = lower.origin + ln_top * lower.y
    b.place("spine_top", top)
    return upper.with_origin(top)


def _rebuild_head(b: _FkBuilder, upper: Frame3) -> None:
    ax = b.channel("neck", "axial")
    flexion = b.channel("neck", "flexion")
    lateral = b.channel("neck", "lateral")
    if None in (ax, flexion, lateral) or not b.desc.has_role("head"):
        return
    ln = b.length("spine_top-head")
    if ln is None:
        return
    neck = upper.rotated_locally(rot_y(ax))
    head_dir = neck.to_world(inverse_spherical_x(flexion, lateral))
    head = upper.origin + ln * head_dir
    b.place("head", head)
    ear_dir = safe_unit(np.cross(neck.x, head_dir))
    if ear_dir is None:
        return
    for side, sign in (("left", -1.0), ("right", 1.0)):
        if b.desc.has_role(f"{side}_ear"):
            ln_ear = b.length(f"head-{side}_ear")
            if ln_ear is not None:
                b.place(f"{side}_ear", head + sign * ln_ear * ear_dir)


def _side_frame(frame: Frame3, side: str) -> Frame3:
    """Mirrored copy for the left side (z away from the midline, det -1)."""
    if side == "right":
        return frame
    return Frame3(axes=frame.axes @ _MIRROR, origin=frame.origin,
                  handedness=-frame.handedness)


def _rebuild_arm(b: _FkBuilder, upper: Frame3, side: str) -> None:
    sh_pos = b.pos(f"{side}_shoulder")
    f = b.channel(f"{side}_shoulder", "flexion")
    a = b.channel(f"{side}_shoulder", "abduction")
    if sh_pos is None or f is None or a is None:
        return
    ln = b.length(f"{side}_shoulder-{side}_elbow") if b.desc.has_role(f"{side}_elbow") else None
    if ln is None:
        return
    shoulder = _side_frame(upper, side).with_origin(sh_pos)
    elbow_pos = sh_pos + ln * shoulder.to_world(inverse_spherical_z(f, a))
    b.place(f"{side}_elbow", elbow_pos)

    tw = b.channel(f"{side}_shoulder", "axial")
    interior = b.hinge(f"{side}_elbow")
    if tw is None or interior is None:
        return
    ln = b.length(f"{side}_elbow-{side}_wrist") if b.desc.has_role(f"{side}_wrist") else None
    if ln is None:
        return
    elbow = shoulder.rotated_locally(align_spherical_z(f, a) @ rot_y(tw)).with_origin(elbow_pos)
    forearm = np.cos(interior) * elbow.y - np.sin(interior) * elbow.x
    wrist_pos = elbow_pos + ln * forearm
    b.place(f"{side}_wrist", wrist_pos)

    tw2 = b.channel(f"{side}_elbow", "axial")
    t_flex = b.channel(f"{side}_wrist", "flexion")
    t_lat = b.channel(f"{side}_wrist", "lateral")
    if None in (tw2, t_flex, t_lat):
        return
    ln = b.length(f"{side}_wrist-{side}_thumb") if b.desc.has_role(f"{side}_thumb") else None
    if ln is None:
        return
    wrist = elbow.rotated_locally(align_hinge(interior) @ rot_y(tw2)).with_origin(wrist_pos)
    b.place(f"{side}_thumb", wrist_pos + ln * wrist.to_world(inverse_spherical_x(t_flex, t_lat)))


def _rebuild_leg(b: _FkBuilder, lower: Frame3, side: str) -> None:
    hip_pos = b.pos(f"{side}_hip")
    f = b.channel(f"{side}_hip", "flexion")
    a = b.channel(f"{side}_hip", "abduction")
    if hip_pos is None or f is None or a is None:
        return
    ln = b.length(f"{side}_hip-{side}_knee") if b.desc.has_role(f"{side}_knee") else None
    if ln is None:
        return
    hip = _side_frame(lower, side).with_origin(hip_pos)
    knee_pos = hip_pos + ln * hip.to_world(inverse_spherical_z(f, a))
    b.place(f"{side}_knee", knee_pos)

    tw = b.channel(f"{side}_hip", "axial")
    interior = b.hinge(f"{side}_knee")
    if tw is None or interior is None:
        return
    ln = b.length(f"{side}_knee-{side}_ankle") if b.desc.has_role(f"{side}_ankle") else None
    if ln is None:
        return
    knee = hip.rotated_locally(align_spherical_z(f, a) @ rot_y(tw)).with_origin(knee_pos)
    shank = np.cos(interior) * knee.y - np.sin(interior) * knee.x
    ankle_pos = knee_pos + ln * shank
    b.place(f"{side}_ankle", ankle_pos)

    if b.desc.has_role(f"{side}_foot_base"):
        return  # separate heel keypoint: foot placement is underdetermined
    tw2 = b.channel(f"{side}_knee", "axial")
    psi = b.channel(f"{side}_ankle", "flexion")
    if tw2 is None or psi is None:
        return
    if not -1e-9 <= psi <= np.pi + 1e-9:
        raise DomainError(f"{side}_ankle.flexion = {psi!r} outside [0, pi]")
    psi = float(np.clip(psi, 0.0, np.pi))
    ln = b.length(f"{side}_ankle-{side}_toes") if b.desc.has_role(f"{side}_toes") else None
    if ln is None:
        return
    ankle = knee.rotated_locally(align_hinge(interior) @ rot_y(tw2)).with_origin(ankle_pos)
    foot = np.cos(psi) * ankle.y + np.sin(psi) * ankle.x
    b.place(f"{side}_toes", ankle_pos + ln * foot)


# ---------------------------------------------------------------------------
# Format-level reconstruction and reports
# ---------------------------------------------------------------------------


def canonical_to_pose(
    positions: np.ndarray, validity: np.ndarray, desc: KeypointSetDescriptor
) -> Pose:
    """Scatter canonical-role positions back into a format-shaped pose."""
    out = np.zeros((desc.joint_count, 3))
    val = np.zeros(desc.joint_count, dtype=bool)
    for role, idx in desc.canonical_map.items():
        r = ROLE_INDEX[role]
        if validity[r]:
            out[idx] = positions[r]
            val[idx] = True
    return Pose(positions=out, validity=val)


def angles_to_sequence(aseq: AngleSequence, strict: bool = False) -> MotionSequence:
    """Rebuild a keypoint sequence from an angle sequence."""
    from .skeleton import get_format

    desc = get_format(aseq.format_id)
    frames = []
    index = {key: i for i, key in enumerate(aseq.layout)}
    for i in range(len(aseq)):
        if not np.isfinite(aseq.root_positions[i]).all():
            frames.append(Pose(positions=np.zeros((desc.joint_count, 3)),
                               validity=np.zeros(desc.joint_count, dtype=bool)))
            continue
        values = {
            key: float(aseq.values[i, col])
            for key, col in index.items()
            if np.isfinite(aseq.values[i, col])
        }
        pos, val = angles_to_canonical(
            values, aseq.bone_lengths, aseq.root_positions[i],
            aseq.root_orientations[i], desc, strict=strict,
        )
        frames.append(canonical_to_pose(pos, val, desc))
    return MotionSequence(descriptor=desc, fps=aseq.fps, frames=tuple(frames))


def sequence_roundtrip_report(seq: MotionSequence) -> dict:
    """Convert -> reconstruct -> compare, as a machine-readable report.

    Errors are measured per frame over joints that are both observed and
    reconstructable; the relative figures divide by the skeleton height
    (largest observed inter-joint distance).
    """
    aseq = sequence_to_angles(seq)
    rebuilt = angles_to_sequence(aseq)
    height = skeleton_height(seq)
    per_frame = []
    worst = 0.0
    total = 0.0
    count = 0
    for orig, back in zip(seq.frames, rebuilt.frames):
        both = orig.validity & back.validity
        if not both.any():
            per_frame.append(None)
            continue
        err = float(np.max(np.linalg.norm(orig.positions[both] - back.positions[both], axis=1)))
        per_frame.append(err)
        worst = max(worst, err)
        total += err
        count += 1
    mean = total / count if count else 0.0
    return {
        "format": seq.descriptor.id,
        "frames": len(seq),
        "frames_compared": count,
        "height": height,
        "max_error": worst,
        "mean_error": mean,
        "relative_max_error": worst / height if height > 0 else 0.0,
        "per_frame_max_error": per_frame,
        "unreconstructable": unreconstructable_joints(seq.descriptor),
        "channel_count": aseq.channel_count,
    }
