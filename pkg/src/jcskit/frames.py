"""Per-joint local coordinate systems (joint coordinate systems, JCS).

Axis conventions follow the ISB reporting standards: at every joint the
local x axis points forward, y up (along the proximal bone) and z sideways,
away from the body midline. Midline joints use z-to-the-right. Left-side
frames are therefore *mirrored* triads: we keep z pointing away from the
midline and record handedness = det[x y z] = -1 instead of flipping an
axis. With that convention a joint's local bone coordinates are identical
for mirror-image left/right poses, which is what makes the downstream angle
channels left/right symmetric.

Every frame is built from two vectors: a primary axis taken directly from a
static bone, a second axis from a cross product, and the remaining axis
completing the triad. Elbows, knees, wrists and ankles use the moving bone
in the cross product (the classic exception: those bones stay inside the
frame's sagittal plane, so the frame still moves only with upstream joints).
When that cross product degenerates (straight limb), the frame falls back to
the hinge-aligned copy of the parent frame so that downstream channels stay
well defined and exactly recoverable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrameError
from .geometry import DEGENERACY_EPS, normalize
from .skeleton import ROLE_INDEX

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class Frame3:
    """Orthonormal local frame: columns of `axes` are x, y, z.

    handedness is det[x y z]: +1 for right-handed triads, -1 for mirrored
    (left-side) triads. It is recorded, never silently corrected.
    """

    axes: np.ndarray
    origin: np.ndarray
    handedness: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "axes", np.asarray(self.axes, dtype=np.float64))
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))

    @property
    def x(self) -> np.ndarray:
        return self.axes[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.axes[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.axes[:, 2]

    def to_local(self, v: np.ndarray) -> np.ndarray:
        """World direction -> local coordinates (orthonormal, so transpose)."""
        return self.axes.T @ v

    def to_world(self, v: np.ndarray) -> np.ndarray:
        return self.axes @ v

    def rotated_locally(self, rotation: np.ndarray) -> "Frame3":
        """Frame whose axes are this frame's axes composed with a local rotation."""
        return Frame3(axes=self.axes @ rotation, origin=self.origin,
                      handedness=self.handedness)

    def with_origin(self, origin: np.ndarray) -> "Frame3":
        return Frame3(axes=self.axes, origin=origin, handedness=self.handedness)

    def is_orthonormal(self, tol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.axes.T @ self.axes, np.eye(3), atol=tol)
            and abs(float(np.linalg.det(self.axes)) - self.handedness) <= tol
        )


def build_frame(
    primary_label: str,
    primary_vec: np.ndarray,
    secondary_vec: np.ndarray,
    cross_label: str,
    origin: np.ndarray | None = None,
    mirror: bool = False,
) -> Frame3:
    """Assemble a frame from a primary bone and a crossing vector.

    axis[primary_label] = normalize(primary_vec)
    axis[cross_label]   = normalize(primary_vec x secondary_vec)
    remaining axis      = cross of the other two, in cyclic label order

    `mirror=True` negates both cross products, producing the mirrored
    (handedness -1) variant used for left-side joints.

    Raises DegenerateFrameError when the inputs are near-parallel or
    near-zero (relative threshold DEGENERACY_EPS).
    """
    p = np.asarray(primary_vec, dtype=np.float64)
    s = np.asarray(secondary_vec, dtype=np.float64)
    np_norm = float(np.linalg.norm(p))
    ns_norm = float(np.linalg.norm(s))
    if np_norm < DEGENERACY_EPS or ns_norm < DEGENERACY_EPS:
        raise DegenerateFrameError("frame inputs are near-zero")
    cross = np.cross(p, s)
    if float(np.linalg.norm(cross)) < DEGENERACY_EPS * np_norm * ns_norm:
        raise DegenerateFrameError("frame inputs are near-parallel")
    sign = -1.0 if mirror else 1.0
    axes = np.zeros((3, 3))
    ip = _AXIS_INDEX[primary_label]
    ic = _AXIS_INDEX[cross_label]
    ir = 3 - ip - ic
    axes[:, ip] = p / np_norm
    axes[:, ic] = sign * cross / float(np.linalg.norm(cross))
    # remaining axis by cyclic completion: x = y ^ z, y = z ^ x, z = x ^ y
    axes[:, ir] = sign * np.cross(axes[:, (ir + 1) % 3], axes[:, (ir + 2) % 3])
    origin = np.zeros(3) if origin is None else np.asarray(origin, dtype=np.float64)
    return Frame3(axes=axes, origin=origin, handedness=sign)


def girdle_frame(
    girdle_right: np.ndarray,
    spine_up: np.ndarray,
    origin: np.ndarray,
    mirror: bool = False,
) -> Frame3:
    """Hip/shoulder frame from a left-to-right girdle vector and a spine segment.

    z = girdle direction (negated for the mirrored left variant so z keeps
    pointing away from the midline), x = spine ^ z (forward), y completes.
    """
    sign = -1.0 if mirror else 1.0
    z = sign * normalize(girdle_right)
    s = np.asarray(spine_up, dtype=np.float64)
    cross = np.cross(s, z)
    if float(np.linalg.norm(cross)) < DEGENERACY_EPS * float(np.linalg.norm(s)):
        raise DegenerateFrameError("spine segment is parallel to the girdle")
    x = sign * cross / float(np.linalg.norm(cross))
    y = sign * np.cross(z, x)
    return Frame3(axes=np.column_stack([x, y, z]), origin=origin, handedness=sign)


def hinge_frame(
    up_bone: np.ndarray,
    moving_bone: np.ndarray,
    origin: np.ndarray,
    mirror: bool = False,
) -> Frame3:
    """Elbow/knee frame: y along the proximal bone, z = y ^ moving bone.

    The moving bone then lies in the local xy plane with a non-positive x
    component, which is what makes the hinge angle alone recover it.
    Raises DegenerateFrameError when the limb is (near-)straight.
    """
    sign = -1.0 if mirror else 1.0
    y = normalize(up_bone)
    m = np.asarray(moving_bone, dtype=np.float64)
    cross = np.cross(y, m)
    if float(np.linalg.norm(cross)) < DEGENERACY_EPS * float(np.linalg.norm(m)):
        raise DegenerateFrameError("moving bone is parallel to the proximal bone")
    z = sign * cross / float(np.linalg.norm(cross))
    x = sign * np.cross(y, z)
    return Frame3(axes=np.column_stack([x, y, z]), origin=origin, handedness=sign)


def ankle_frame(
    up_bone: np.ndarray,
    foot_vector: np.ndarray,
    origin: np.ndarray,
    mirror: bool = False,
) -> Frame3:
    """Ankle frame: y along the lower leg (ankle -> knee), z = foot ^ y.

    The cross order puts z away from the midline in a neutral stance (foot
    forward), so the knee's axial channel reads 0 there instead of sitting
    on the +-pi branch cut. The foot lies in the local xy plane with a
    non-negative x component.
    """
    sign = -1.0 if mirror else 1.0
    y = normalize(up_bone)
    f = np.asarray(foot_vector, dtype=np.float64)
    cross = np.cross(f, y)
    if float(np.linalg.norm(cross)) < DEGENERACY_EPS * float(np.linalg.norm(f)):
        raise DegenerateFrameError("foot vector is parallel to the lower leg")
    z = sign * cross / float(np.linalg.norm(cross))
    x = sign * np.cross(y, z)
    return Frame3(axes=np.column_stack([x, y, z]), origin=origin, handedness=sign)


def wrist_frame(
    forearm_up: np.ndarray,
    thumb: np.ndarray,
    origin: np.ndarray,
    mirror: bool = False,
) -> Frame3:
    """Wrist frame: y along the forearm (wrist -> elbow), x = y ^ thumb.

    The thumb ends up in the local yz plane with a non-negative z component.
    """
    sign = -1.0 if mirror else 1.0
    y = normalize(forearm_up)
    t = np.asarray(thumb, dtype=np.float64)
    cross = np.cross(y, t)
    if float(np.linalg.norm(cross)) < DEGENERACY_EPS * float(np.linalg.norm(t)):
        raise DegenerateFrameError("thumb is parallel to the forearm")
    x = sign * cross / float(np.linalg.norm(cross))
    z = sign * np.cross(x, y)
    return Frame3(axes=np.column_stack([x, y, z]), origin=origin, handedness=sign)


def neck_frame(spine_top_seg: np.ndarray, ear_line: np.ndarray, origin: np.ndarray) -> Frame3:
    """Neck frame: y along the top spine segment, x = y ^ (left ear -> right ear).

    Right-handed (midline joint, z to the right). The ear line makes the
    frame follow the head's axial rotation, which is exactly what the neck
    axial channel reads off.
    """
    y = normalize(spine_top_seg)
    e = np.asarray(ear_line, dtype=np.float64)
    cross = np.cross(y, e)
    if float(np.linalg.norm(cross)) < DEGENERACY_EPS * float(np.linalg.norm(e)):
        raise DegenerateFrameError("ear line is parallel to the spine")
    x = cross / float(np.linalg.norm(cross))
    z = np.cross(x, y)
    return Frame3(axes=np.column_stack([x, y, z]), origin=origin, handedness=1.0)


# ---------------------------------------------------------------------------
# Whole-pose JCS computation
# ---------------------------------------------------------------------------

JCS_ROLES = (
    "lower_proximal",
    "upper_proximal",
    "left_hip",
    "right_hip",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_knee",
    "right_knee",
    "left_wrist",
    "right_wrist",
    "left_ankle",
    "right_ankle",
    "neck",
)


@dataclass
class JcsSet:
    """The frames computed for one canonical pose; absent roles are omitted."""

    frames: dict[str, Frame3]

    def __contains__(self, role: str) -> bool:
        return role in self.frames

    def __getitem__(self, role: str) -> Frame3:
        return self.frames[role]

    def get(self, role: str) -> Frame3 | None:
        return self.frames.get(role)


def _pos(positions: np.ndarray, validity: np.ndarray, role: str) -> np.ndarray | None:
    idx = ROLE_INDEX[role]
    if not validity[idx]:
        return None
    return positions[idx]


def compute_jcs(positions: np.ndarray, validity: np.ndarray) -> JcsSet:
    """Build every joint coordinate system available for a canonical pose.

    positions/validity are canonical-role arrays (see skeleton.ROLES).
    Degenerate or under-observed joints are simply left out of the set;
    hinge frames of straight limbs fall back to the hinge-aligned parent
    frame (handled in the angle extractor, not here) and are omitted too.
    """
    out: dict[str, Frame3] = {}
    pelvis = _pos(positions, validity, "pelvis")
    spine_mid = _pos(positions, validity, "spine_mid")
    spine_top = _pos(positions, validity, "spine_top")
    hip_l = _pos(positions, validity, "left_hip")
    hip_r = _pos(positions, validity, "right_hip")
    sh_l = _pos(positions, validity, "left_shoulder")
    sh_r = _pos(positions, validity, "right_shoulder")

    spine_ref = spine_mid if spine_mid is not None else spine_top
    lower_spine = None if (pelvis is None or spine_ref is None) else spine_ref - pelvis
    if spine_top is not None:
        upper_base = spine_mid if spine_mid is not None else pelvis
        upper_spine = None if upper_base is None else spine_top - upper_base
    else:
        upper_spine = None

    if hip_l is not None and hip_r is not None and lower_spine is not None and pelvis is not None:
        try:
            right = girdle_frame(hip_r - hip_l, lower_spine, hip_r)
            out["right_hip"] = right
            out["left_hip"] = girdle_frame(hip_r - hip_l, lower_spine, hip_l, mirror=True)
            out["lower_proximal"] = right.with_origin(pelvis)
        except DegenerateFrameError:
            pass

    if sh_l is not None and sh_r is not None and upper_spine is not None and spine_top is not None:
        try:
            right = girdle_frame(sh_r - sh_l, upper_spine, sh_r)
            out["right_shoulder"] = right
            out["left_shoulder"] = girdle_frame(sh_r - sh_l, upper_spine, sh_l, mirror=True)
            out["upper_proximal"] = right.with_origin(spine_top)
        except DegenerateFrameError:
            pass

    for side, mirror in (("left", True), ("right", False)):
        sh = _pos(positions, validity, f"{side}_shoulder")
        el = _pos(positions, validity, f"{side}_elbow")
        wr = _pos(positions, validity, f"{side}_wrist")
        th = _pos(positions, validity, f"{side}_thumb")
        if sh is not None and el is not None and wr is not None:
            try:
                out[f"{side}_elbow"] = hinge_frame(sh - el, wr - el, el, mirror=mirror)
            except DegenerateFrameError:
                pass
        if el is not None and wr is not None and th is not None:
            try:
                out[f"{side}_wrist"] = wrist_frame(el - wr, th - wr, wr, mirror=mirror)
            except DegenerateFrameError:
                pass

        hip = _pos(positions, validity, f"{side}_hip")
        kn = _pos(positions, validity, f"{side}_knee")
        an = _pos(positions, validity, f"{side}_ankle")
        if hip is not None and kn is not None and an is not None:
            try:
                out[f"{side}_knee"] = hinge_frame(hip - kn, an - kn, kn, mirror=mirror)
            except DegenerateFrameError:
                pass
        foot = _foot_vector(positions, validity, side)
        if kn is not None and an is not None and foot is not None:
            try:
                out[f"{side}_ankle"] = ankle_frame(kn - an, foot, an, mirror=mirror)
            except DegenerateFrameError:
                pass

    # the head keypoint feeds the neck's flexion/lateral channels in the
    # angle extractor; the frame itself only needs the spine and ear line
    ear_l = _pos(positions, validity, "left_ear")
    ear_r = _pos(positions, validity, "right_ear")
    if upper_spine is not None and ear_l is not None and ear_r is not None and spine_top is not None:
        try:
            out["neck"] = neck_frame(upper_spine, ear_r - ear_l, spine_top)
        except DegenerateFrameError:
            pass
    return JcsSet(frames=out)


def _foot_vector(positions: np.ndarray, validity: np.ndarray, side: str) -> np.ndarray | None:
    """Base-of-foot -> toes vector; falls back to ankle -> toes."""
    toes = _pos(positions, validity, f"{side}_toes")
    if toes is None:
        return None
    base = _pos(positions, validity, f"{side}_foot_base")
    if base is None:
        base = _pos(positions, validity, f"{side}_ankle")
    if base is None:
        return None
    return toes - base
