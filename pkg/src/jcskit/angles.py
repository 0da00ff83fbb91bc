"""Flexion / abduction / axial-rotation channels from canonical poses.

Channel conventions (all radians):

* Shoulders and hips use spherical coordinates with the local z axis as
  zenith: flexion is the signed angle of the bone's sagittal-plane (xy)
  projection from -y (positive forward, toward +x), abduction the signed
  angle between the bone and that projection (positive away from the
  midline). At the zenith (bone along +-z, e.g. a T-pose arm) flexion is
  defined as 0 and abduction as +-pi/2, which keeps the mapping total.
* Wrists and the neck use the x axis as zenith: flexion is the signed angle
  between the bone and its frontal-plane (yz) projection (positive forward),
  "lateral" the signed angle of that projection from +y.
* Elbows and knees are hinges: the canonical value is the interior angle
  between the moving bone and the frame's y axis, in [0, pi] (straight limb
  = pi). The clinician-style value (straight = 0) is an output option only.
* Axial rotation aligns the proximal frame with the distal one by applying
  flexion about local z then abduction about local x, and reads the
  remaining twist about the distal y axis. Internal rotation is positive
  toward the midline on both sides.
* The spine compares the lower and upper proximal frames; with a mid-spine
  keypoint it emits flexion + lateral + axial, without one flexion is
  structurally unavailable.

Angle formulas operate on bone coordinates expressed in the joint's own
(possibly mirrored) frame, which is what makes every channel identical for
mirror-image left/right poses.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFrameError, InternalConsistencyError
from .frames import Frame3, JcsSet, compute_jcs, _foot_vector
from .geometry import (
    axis_angle_matrix,
    minimal_rotation,
    normalize,
    rot_x,
    rot_y,
    rot_z,
    signed_angle_about,
)
from .skeleton import (
    KeypointSetDescriptor,
    MotionSequence,
    Pose,
    ROLE_INDEX,
    canonical_bone_lengths,
)

_EY = np.array([0.0, 1.0, 0.0])
_EZ = np.array([0.0, 0.0, 1.0])

ZENITH_EPS = 1e-7

# Owners in layout order; channels per owner in documented order.
CHANNEL_OWNERS: tuple[str, ...] = (
    "spine",
    "neck",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
)

_OWNER_CHANNELS: dict[str, tuple[str, ...]] = {
    "spine": ("flexion", "lateral", "axial"),
    "neck": ("flexion", "lateral", "axial"),
    "shoulder": ("flexion", "abduction", "axial"),
    "elbow": ("flexion", "axial"),
    "wrist": ("flexion", "lateral"),
    "hip": ("flexion", "abduction", "axial"),
    "knee": ("flexion", "axial"),
    "ankle": ("flexion", "abduction"),
}


def _owner_kind(owner: str) -> str:
    return owner.split("_")[-1] if "_" in owner else owner


# ---------------------------------------------------------------------------
# Channel primitives
# ---------------------------------------------------------------------------


def spherical_z(bone: np.ndarray, handedness: float = 1.0) -> tuple[float, float]:
    """(flexion, abduction) of a unit bone in z-zenith spherical coordinates.

    `bone` is given in the joint frame's local coordinates. `handedness`
    scales the abduction sign for callers using right-handed-only frames;
    with this package's mirrored left frames the local z component already
    points away from the midline, so the extractor passes +1.
    """
    bone = _require_unit(bone)
    p = float(np.hypot(bone[0], bone[1]))
    if p < ZENITH_EPS:
        return 0.0, float(np.copysign(np.pi / 2, handedness * bone[2]))
    flexion = float(np.arctan2(bone[0], -bone[1]))
    abduction = float(np.arctan2(handedness * bone[2], p))
    return flexion, abduction


def inverse_spherical_z(flexion: float, abduction: float) -> np.ndarray:
    """Unit bone with the given z-zenith angles (local coordinates)."""
    ca = np.cos(abduction)
    return np.array([ca * np.sin(flexion), -ca * np.cos(flexion), np.sin(abduction)])


def spherical_x(bone: np.ndarray, handedness: float = 1.0) -> tuple[float, float]:
    """(flexion, lateral) of a unit bone in x-zenith spherical coordinates."""
    bone = _require_unit(bone)
    p = float(np.hypot(bone[1], bone[2]))
    if p < ZENITH_EPS:
        return float(np.copysign(np.pi / 2, bone[0])), 0.0
    flexion = float(np.arctan2(bone[0], p))
    lateral = float(np.arctan2(handedness * bone[2], bone[1]))
    return flexion, lateral


def inverse_spherical_x(flexion: float, lateral: float) -> np.ndarray:
    cf = np.cos(flexion)
    return np.array([np.sin(flexion), cf * np.cos(lateral), cf * np.sin(lateral)])


def _interior_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle between two unit vectors in [0, pi].

    atan2 of the cross/dot pair stays well conditioned at 0 and pi, where
    arccos of the dot product alone loses half the significant digits.
    """
    return float(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v)))


def hinge_flexion(moving_bone: np.ndarray, frame: Frame3) -> float:
    """Interior angle between a moving bone and the frame's y axis, in [0, pi].

    Straight limb -> pi, fully folded -> 0.
    """
    return _interior_angle(normalize(moving_bone), frame.y)


def anatomical_flexion(interior: float) -> float:
    """Clinician-style hinge value: straight limb = 0."""
    return float(np.pi - interior)


def align_spherical_z(flexion: float, abduction: float) -> np.ndarray:
    """Local rotation carrying the rest pose (-y bone) onto (flexion, abduction).

    Flexion is a rotation about local z; abduction then rotates the flexed
    bone about the rotated x axis. The composed matrix maps local +y onto
    the distal frame's +y (the proximal bone of the next joint).
    """
    return rot_z(flexion) @ rot_x(-abduction)


def align_hinge(interior: float) -> np.ndarray:
    """Local rotation aligning a frame's y with the hinge's distal y axis."""
    return rot_z(interior - np.pi)


def axial_rotation(
    proximal: Frame3,
    align: np.ndarray,
    distal: Frame3,
    check_tol: float = 1e-3,
) -> float:
    """Twist left over after aligning the proximal frame with the distal one.

    `align` is the local alignment rotation (from align_spherical_z /
    align_hinge, or a minimal rotation for the neck). The aligned y axis
    must already match the distal y; a mismatch beyond `check_tol` means a
    convention bug somewhere upstream, not bad data, so it raises.
    Measured about the distal y axis; range (-pi, pi].
    """
    d = proximal.axes.T @ distal.axes  # distal axes in proximal-local coords
    y_aligned = align @ _EY
    err = float(np.linalg.norm(y_aligned - d[:, 1]))
    if err > check_tol:
        raise InternalConsistencyError(
            f"axial alignment check failed: |R*y - y_distal| = {err:.3e}"
        )
    return signed_angle_about(align @ _EZ, d[:, 2], d[:, 1])


def ankle_angles(
    lower_leg: np.ndarray,
    foot_vector: np.ndarray,
    frame: Frame3,
    toe_line: np.ndarray | None = None,
) -> tuple[float, float | None]:
    """(flexion, abduction) at the ankle.

    Flexion is the interior angle between the lower leg and the
    base-of-foot -> toes vector. Abduction needs a vector across the foot
    (a toe line) and is the signed angle between it and the frame's z axis,
    measured about the foot axis; none of the built-in keypoint sets carries
    such a pair, so it is None unless a toe line is supplied.
    """
    leg = normalize(lower_leg)
    foot = normalize(foot_vector)
    flexion = _interior_angle(leg, foot)
    if toe_line is None:
        return flexion, None
    t = normalize(toe_line)
    abduction = signed_angle_about(frame.z, t, foot)
    return flexion, abduction


def spine_angles(
    lower: Frame3,
    upper: Frame3,
    mid_spine_present: bool,
) -> tuple[float | None, float | None, float | None]:
    """(flexion, lateral, axial) between the proximal torso frames.

    Without a mid-spine keypoint the torso is one segment and flexion is
    unobservable: lateral compares the y axes (signed about the shared x),
    axial compares the x axes about the lower y. With a mid-spine keypoint
    the upper x axis is decomposed into azimuth (axial) and elevation
    (flexion) over the lower xz plane, and lateral is the residual twist
    carrying the transformed lower z onto the upper z.
    """
    d = lower.axes.T @ upper.axes
    x_up = d[:, 0]
    planar = float(np.hypot(x_up[0], x_up[2]))
    if not mid_spine_present:
        if planar < ZENITH_EPS:
            return None, None, None
        axial = float(np.arctan2(-x_up[2], x_up[0]))
        lateral = signed_angle_about(_EY, d[:, 1], x_up)
        return None, lateral, axial
    flexion = float(np.arctan2(-x_up[1], planar))
    if planar < ZENITH_EPS:
        return flexion, None, None
    axial = float(np.arctan2(-x_up[2], x_up[0]))
    a = axis_angle_matrix(rot_y(axial) @ _EZ, -flexion) @ rot_y(axial)
    lateral = signed_angle_about(a @ _EZ, d[:, 2], x_up)
    return flexion, lateral, axial


def spine_rotation(
    flexion: float | None,
    lateral: float,
    axial: float,
    mid_spine_present: bool,
) -> np.ndarray:
    """Local rotation lower -> upper implied by the spine channels."""
    if not mid_spine_present:
        x_t = rot_y(axial) @ np.array([1.0, 0.0, 0.0])
        return axis_angle_matrix(x_t, lateral) @ rot_y(axial)
    a = axis_angle_matrix(rot_y(axial) @ _EZ, -(flexion or 0.0)) @ rot_y(axial)
    return axis_angle_matrix(a @ np.array([1.0, 0.0, 0.0]), lateral) @ a


def _require_unit(bone: np.ndarray) -> np.ndarray:
    bone = np.asarray(bone, dtype=np.float64)
    if abs(float(np.linalg.norm(bone)) - 1.0) > 1e-6:
        raise ValueError("bone must be a unit vector")
    return bone


# ---------------------------------------------------------------------------
# Layouts
# ---------------------------------------------------------------------------


def structural_layout(desc: KeypointSetDescriptor) -> tuple[tuple[str, str], ...]:
    """Channels a format can ever produce, in the documented fixed order.

    Transiently unobserved channels stay in the layout and are emitted as
    unavailable; channels a format can never produce (e.g. wrist channels
    without thumbs) are excluded entirely.
    """
    has = desc.has_role
    torso = has("pelvis") and has("spine_top")
    girdles = torso and has("left_shoulder") and has("right_shoulder") and has("left_hip") and has("right_hip")
    out: list[tuple[str, str]] = []
    if girdles:
        if has("spine_mid"):
            out += [("spine", "flexion"), ("spine", "lateral"), ("spine", "axial")]
        else:
            out += [("spine", "lateral"), ("spine", "axial")]
        ears = has("left_ear") and has("right_ear")
        if ears and has("head"):
            out += [("neck", "flexion"), ("neck", "lateral")]
        if ears:
            out += [("neck", "axial")]
    for owner in CHANNEL_OWNERS[2:]:
        side, kind = owner.split("_")
        if not girdles:
            break
        sh, el, wr, th = (has(f"{side}_{j}") for j in ("shoulder", "elbow", "wrist", "thumb"))
        hp, kn, an = (has(f"{side}_{j}") for j in ("hip", "knee", "ankle"))
        foot = has(f"{side}_toes")
        if kind == "shoulder" and sh and el:
            out += [(owner, "flexion"), (owner, "abduction")]
            if wr:
                out += [(owner, "axial")]
        elif kind == "elbow" and sh and el and wr:
            out += [(owner, "flexion")]
            if th:
                out += [(owner, "axial")]
        elif kind == "wrist" and el and wr and th:
            out += [(owner, "flexion"), (owner, "lateral")]
        elif kind == "hip" and hp and kn:
            out += [(owner, "flexion"), (owner, "abduction")]
            if an:
                out += [(owner, "axial")]
        elif kind == "knee" and hp and kn and an:
            out += [(owner, "flexion")]
            if foot:
                out += [(owner, "axial")]
        elif kind == "ankle" and kn and an and foot:
            out += [(owner, "flexion")]
    return tuple(out)


# ---------------------------------------------------------------------------
# Whole-pose extraction
# ---------------------------------------------------------------------------


@dataclass
class FrameAngles:
    """Angle channels of one pose plus the root needed to invert them."""

    values: dict[tuple[str, str], float] = field(default_factory=dict)
    root_position: np.ndarray | None = None
    root_orientation: np.ndarray | None = None

    def get(self, owner: str, channel: str) -> float | None:
        return self.values.get((owner, channel))


def extract_pose_angles(
    positions: np.ndarray,
    validity: np.ndarray,
    jcs: JcsSet | None = None,
) -> FrameAngles:
    """All available channels of one canonical pose.

    Hinge frames degenerate at straight limbs fall back to the hinge-aligned
    parent frame, so axial channels read 0 there instead of disappearing;
    everything else that cannot be computed is simply absent from the result.
    """
    if jcs is None:
        jcs = compute_jcs(positions, validity)
    out = FrameAngles()
    lower = jcs.get("lower_proximal")
    upper = jcs.get("upper_proximal")
    if lower is not None:
        out.root_position = positions[ROLE_INDEX["pelvis"]].copy()
        out.root_orientation = lower.axes.copy()
    if lower is not None and upper is not None:
        mid = bool(validity[ROLE_INDEX["spine_mid"]])
        flexion, lateral, axial = spine_angles(lower, upper, mid_spine_present=mid)
        _put(out, "spine", "flexion", flexion)
        _put(out, "spine", "lateral", lateral)
        _put(out, "spine", "axial", axial)
    _extract_neck(out, positions, validity, jcs)
    for side in ("left", "right"):
        _extract_arm(out, positions, validity, jcs, side)
        _extract_leg(out, positions, validity, jcs, side)
    return out


def _put(out: FrameAngles, owner: str, channel: str, value: float | None) -> None:
    if value is not None:
        out.values[(owner, channel)] = float(value)


def _role(positions, validity, role):
    idx = ROLE_INDEX[role]
    return positions[idx] if validity[idx] else None


def _extract_neck(out, positions, validity, jcs) -> None:
    neck = jcs.get("neck")
    upper = jcs.get("upper_proximal")
    if neck is None or upper is None:
        return
    align = minimal_rotation(_EY, upper.axes.T @ neck.y)
    if align is None:
        return
    _put(out, "neck", "axial", axial_rotation(upper, align, neck))
    head = _role(positions, validity, "head")
    top = _role(positions, validity, "spine_top")
    if head is None or top is None:
        return
    try:
        bone = normalize(head - top)
    except DegenerateFrameError:
        return
    flexion, lateral = spherical_x(neck.to_local(bone))
    _put(out, "neck", "flexion", flexion)
    _put(out, "neck", "lateral", lateral)


def _aligned_fallback(parent: Frame3, align: np.ndarray, origin: np.ndarray) -> Frame3:
    return Frame3(axes=parent.axes @ align, origin=origin, handedness=parent.handedness)


def _extract_arm(out, positions, validity, jcs, side: str) -> None:
    shoulder_frame = jcs.get(f"{side}_shoulder")
    sh = _role(positions, validity, f"{side}_shoulder")
    el = _role(positions, validity, f"{side}_elbow")
    if shoulder_frame is None or sh is None or el is None:
        return
    try:
        bone = normalize(el - sh)
    except DegenerateFrameError:
        return
    flexion, abduction = spherical_z(shoulder_frame.to_local(bone))
    _put(out, f"{side}_shoulder", "flexion", flexion)
    _put(out, f"{side}_shoulder", "abduction", abduction)

    wr = _role(positions, validity, f"{side}_wrist")
    if wr is None:
        return
    align = align_spherical_z(flexion, abduction)
    elbow_frame = jcs.get(f"{side}_elbow")
    if elbow_frame is None:
        elbow_frame = _aligned_fallback(shoulder_frame, align, el)
    _put(out, f"{side}_shoulder", "axial", axial_rotation(shoulder_frame, align, elbow_frame))
    try:
        interior = hinge_flexion(wr - el, elbow_frame)
    except DegenerateFrameError:
        return
    _put(out, f"{side}_elbow", "flexion", interior)

    th = _role(positions, validity, f"{side}_thumb")
    if th is None:
        return
    wrist_frame = jcs.get(f"{side}_wrist")
    if wrist_frame is None:
        wrist_frame = _aligned_fallback(elbow_frame, align_hinge(interior), wr)
    _put(out, f"{side}_elbow", "axial",
         axial_rotation(elbow_frame, align_hinge(interior), wrist_frame))
    try:
        thumb = normalize(th - wr)
    except DegenerateFrameError:
        return
    t_flex, t_lat = spherical_x(wrist_frame.to_local(thumb))
    _put(out, f"{side}_wrist", "flexion", t_flex)
    _put(out, f"{side}_wrist", "lateral", t_lat)


def _extract_leg(out, positions, validity, jcs, side: str) -> None:
    hip_frame = jcs.get(f"{side}_hip")
    hip = _role(positions, validity, f"{side}_hip")
    kn = _role(positions, validity, f"{side}_knee")
    if hip_frame is None or hip is None or kn is None:
        return
    try:
        bone = normalize(kn - hip)
    except DegenerateFrameError:
        return
    flexion, abduction = spherical_z(hip_frame.to_local(bone))
    _put(out, f"{side}_hip", "flexion", flexion)
    _put(out, f"{side}_hip", "abduction", abduction)

    an = _role(positions, validity, f"{side}_ankle")
    if an is None:
        return
    align = align_spherical_z(flexion, abduction)
    knee_frame = jcs.get(f"{side}_knee")
    if knee_frame is None:
        knee_frame = _aligned_fallback(hip_frame, align, kn)
    _put(out, f"{side}_hip", "axial", axial_rotation(hip_frame, align, knee_frame))
    try:
        interior = hinge_flexion(an - kn, knee_frame)
    except DegenerateFrameError:
        return
    _put(out, f"{side}_knee", "flexion", interior)

    foot = _foot_vector(positions, validity, side)
    if foot is None:
        return
    ankle_frame = jcs.get(f"{side}_ankle")
    if ankle_frame is None:
        ankle_frame = _aligned_fallback(knee_frame, align_hinge(interior), an)
    _put(out, f"{side}_knee", "axial",
         axial_rotation(knee_frame, align_hinge(interior), ankle_frame))
    try:
        a_flex, _ = ankle_angles(kn - an, foot, ankle_frame)
    except DegenerateFrameError:
        return
    _put(out, f"{side}_ankle", "flexion", a_flex)


# ---------------------------------------------------------------------------
# Sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AngleSequence:
    """Vectorized angle channels of a whole sequence.

    values is (N, C) float64 with NaN marking unavailable channels; layout
    gives the (owner, channel) meaning of each column. Root pose and
    canonical bone lengths are carried as sidecar data so the mapping stays
    invertible.
    """

    layout: tuple[tuple[str, str], ...]
    values: np.ndarray
    root_positions: np.ndarray
    root_orientations: np.ndarray
    fps: float
    format_id: str
    bone_lengths: dict[str, float]

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def channel_count(self) -> int:
        return self.values.shape[1]

    def availability(self) -> np.ndarray:
        return ~np.isnan(self.values)


def _threads() -> int:
    raw = os.environ.get("JCS_NUM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sequence_to_angles(seq: MotionSequence) -> AngleSequence:
    """Convert every frame of a sequence into its angle vector."""
    desc = seq.descriptor
    layout = structural_layout(desc)
    index = {key: i for i, key in enumerate(layout)}
    n = len(seq)
    values = np.full((n, len(layout)), np.nan)
    roots_p = np.full((n, 3), np.nan)
    roots_o = np.full((n, 3, 3), np.nan)

    def run(i: int) -> None:
        positions, validity = desc.canonical_positions(seq.frames[i])
        fa = extract_pose_angles(positions, validity)
        for key, v in fa.values.items():
            col = index.get(key)
            if col is not None:
                values[i, col] = v
        if fa.root_position is not None:
            roots_p[i] = fa.root_position
            roots_o[i] = fa.root_orientation

    workers = _threads()
    if workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n)))
    else:
        for i in range(n):
            run(i)
    return AngleSequence(
        layout=layout,
        values=values,
        root_positions=roots_p,
        root_orientations=roots_o,
        fps=seq.fps,
        format_id=desc.id,
        bone_lengths=canonical_bone_lengths(seq),
    )


# ---------------------------------------------------------------------------
# Dot-product baseline
# ---------------------------------------------------------------------------


def adjacent_bone_pairs(desc: KeypointSetDescriptor) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Every unordered pair of tree bones sharing a joint, deterministically."""
    incident: dict[int, list[tuple[int, int]]] = {}
    for bone in desc.bones:
        for j in bone:
            incident.setdefault(j, []).append(bone)
    pairs = []
    for j in range(desc.joint_count):
        bones = incident.get(j, [])
        for a in range(len(bones)):
            for b in range(a + 1, len(bones)):
                pairs.append((bones[a], bones[b]))
    return pairs


def dot_product_baseline(
    pose: Pose,
    desc: KeypointSetDescriptor,
    pairs: list[tuple[tuple[int, int], tuple[int, int]]] | None = None,
) -> np.ndarray:
    """Plain inter-bone angles acos(u.v / |u||v|), NaN where unavailable.

    The default pair list is every adjacent bone pair in the descriptor
    tree, with both vectors oriented away from the shared joint.
    """
    if pairs is None:
        pairs = adjacent_bone_pairs(desc)
    out = np.full(len(pairs), np.nan)
    for i, (b1, b2) in enumerate(pairs):
        shared = set(b1) & set(b2)
        if len(shared) == 2:
            j = b1[0]  # identical bones: measure the bone against itself
        elif len(shared) == 1:
            j = shared.pop()
        else:
            raise ValueError(f"bones {b1} and {b2} do not share a joint")
        e1 = b1[0] if b1[1] == j else b1[1]
        e2 = b2[0] if b2[1] == j else b2[1]
        if not (pose.validity[j] and pose.validity[e1] and pose.validity[e2]):
            continue
        u = pose.positions[e1] - pose.positions[j]
        v = pose.positions[e2] - pose.positions[j]
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        if nu < 1e-12 or nv < 1e-12:
            continue
        out[i] = float(np.arccos(np.clip(float(np.dot(u, v)) / (nu * nv), -1.0, 1.0)))
    return out


def baseline_pair_labels(desc: KeypointSetDescriptor,
                         pairs=None) -> list[tuple[str, str]]:
    """Human-readable "parent-child" labels for baseline pairs."""
    if pairs is None:
        pairs = adjacent_bone_pairs(desc)
    names = desc.joint_names
    return [
        (f"{names[a[0]]}-{names[a[1]]}", f"{names[b[0]]}-{names[b[1]]}")
        for a, b in pairs
    ]
