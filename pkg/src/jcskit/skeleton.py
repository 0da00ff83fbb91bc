"""Canonical skeleton model: keypoint formats, sequences, and sequence ops.

A *keypoint set descriptor* describes one on-disk/off-device format: joint
names, the bone tree, and a partial mapping from canonical joint roles
(pelvis, shoulders, knees, ...) into local joint indices. All angle code in
this package works on the canonical roles only, so adding a format is a
matter of writing a descriptor.

Built-in formats: ``kinect25`` (Kinect v2 / NTU RGB+D order), ``openpose25``
(OpenPose BODY_25) and ``coco17``. Custom descriptors can be registered with
:func:`register_format` before first use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .geometry import RigidTransform

# ---------------------------------------------------------------------------
# Canonical joint roles
# ---------------------------------------------------------------------------

# Fixed vocabulary of canonical roles. Order matters: it defines the layout
# of canonical pose arrays and the documented channel ordering downstream.
ROLES: tuple[str, ...] = (
    "pelvis",
    "spine_mid",
    "spine_top",
    "head",
    "left_ear",
    "right_ear",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_thumb",
    "right_thumb",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_foot_base",
    "right_foot_base",
    "left_toes",
    "right_toes",
)

ROLE_INDEX: dict[str, int] = {name: i for i, name in enumerate(ROLES)}
N_ROLES = len(ROLES)

# Roles that may be synthesized as midpoints when a format lacks the joint.
# pelvis <- midpoint of hips, spine_top <- midpoint of shoulders.
VIRTUAL_ROLE_PARENTS: dict[str, tuple[str, str]] = {
    "pelvis": ("left_hip", "right_hip"),
    "spine_top": ("left_shoulder", "right_shoulder"),
}


@dataclass(frozen=True)
class KeypointSetDescriptor:
    """Names, bone tree and canonical mapping of one keypoint format.

    bones must form a single tree over all joints (J-1 edges, connected,
    acyclic), rooted at the joint playing the pelvis/mid-hip part (or the
    closest available joint for formats without one). canonical_map is an
    injective partial map role -> local index; the pelvis role must be
    mapped directly or synthesizable from the two hips.
    """

    id: str
    joint_names: tuple[str, ...]
    bones: tuple[tuple[int, int], ...]
    canonical_map: dict[str, int]
    root: int = 0

    def __post_init__(self):
        j = len(self.joint_names)
        if len(self.bones) != j - 1:
            raise StructuralError(
                f"{self.id}: bone tree needs {j - 1} edges, got {len(self.bones)}"
            )
        seen = {self.root}
        adj: dict[int, list[int]] = {i: [] for i in range(j)}
        for p, c in self.bones:
            if not (0 <= p < j and 0 <= c < j):
                raise StructuralError(f"{self.id}: bone ({p},{c}) out of range")
            adj[p].append(c)
            adj[c].append(p)
        # BFS from the root: connected + J-1 edges == tree.
        queue = [self.root]
        while queue:
            node = queue.pop()
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if len(seen) != j:
            raise StructuralError(f"{self.id}: bone graph is not connected")
        values = list(self.canonical_map.values())
        if len(set(values)) != len(values):
            raise StructuralError(f"{self.id}: canonical_map is not injective")
        for role, idx in self.canonical_map.items():
            if role not in ROLE_INDEX:
                raise StructuralError(f"{self.id}: unknown role {role!r}")
            if not 0 <= idx < j:
                raise StructuralError(f"{self.id}: role {role!r} maps out of range")
        if "pelvis" not in self.canonical_map and not self._can_synthesize("pelvis"):
            raise StructuralError(f"{self.id}: pelvis is neither mapped nor synthesizable")

    def _can_synthesize(self, role: str) -> bool:
        parents = VIRTUAL_ROLE_PARENTS.get(role)
        return parents is not None and all(p in self.canonical_map for p in parents)

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    def has_role(self, role: str) -> bool:
        return role in self.canonical_map or self._can_synthesize(role)

    def is_virtual(self, role: str) -> bool:
        return role not in self.canonical_map and self._can_synthesize(role)

    def parents(self) -> np.ndarray:
        """Parent index per joint (-1 for the root)."""
        out = np.full(self.joint_count, -1, dtype=np.int64)
        for p, c in self.bones:
            out[c] = p
        return out

    def canonical_positions(self, pose: "Pose") -> tuple[np.ndarray, np.ndarray]:
        """Canonical-role positions (N_ROLES, 3) and validity (N_ROLES,).

        Virtual roles become midpoints of their two parents and are valid
        only when both parents are.
        """
        positions = np.zeros((N_ROLES, 3))
        validity = np.zeros(N_ROLES, dtype=bool)
        for role, idx in self.canonical_map.items():
            r = ROLE_INDEX[role]
            positions[r] = pose.positions[idx]
            validity[r] = pose.validity[idx]
        for role, (pa, pb) in VIRTUAL_ROLE_PARENTS.items():
            if role in self.canonical_map:
                continue
            if pa in self.canonical_map and pb in self.canonical_map:
                ia, ib = self.canonical_map[pa], self.canonical_map[pb]
                r = ROLE_INDEX[role]
                positions[r] = 0.5 * (pose.positions[ia] + pose.positions[ib])
                validity[r] = bool(pose.validity[ia] and pose.validity[ib])
        return positions, validity


# ---------------------------------------------------------------------------
# Pose / sequence containers
# ---------------------------------------------------------------------------


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Pose:
    """Per-frame J x 3 positions with a validity mask.

    Invalid joints hold a zero position; every valid position is finite.
    """

    positions: np.ndarray
    validity: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise StructuralError(f"pose positions must be (J, 3), got {pos.shape}")
        if self.validity is None:
            val = np.ones(pos.shape[0], dtype=bool)
        else:
            val = np.array(self.validity, dtype=bool)
        if val.shape != (pos.shape[0],):
            raise StructuralError("validity mask length does not match joint count")
        val = val & np.isfinite(pos).all(axis=1)
        pos = np.where(val[:, None], pos, 0.0)
        object.__setattr__(self, "positions", _freeze(pos))
        object.__setattr__(self, "validity", _freeze(val))

    @property
    def joint_count(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class MotionSequence:
    """Ordered frames of one subject in one keypoint format."""

    descriptor: KeypointSetDescriptor
    fps: float
    frames: tuple[Pose, ...]

    def __post_init__(self):
        if not self.fps > 0:
            raise StructuralError("fps must be positive")
        frames = tuple(self.frames)
        for i, f in enumerate(frames):
            if f.joint_count != self.descriptor.joint_count:
                raise StructuralError(
                    f"frame {i} has {f.joint_count} joints, descriptor "
                    f"{self.descriptor.id} expects {self.descriptor.joint_count}"
                )
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def positions_array(self) -> np.ndarray:
        """(N, J, 3) stacked positions (zeros where invalid)."""
        return np.stack([f.positions for f in self.frames])

    def validity_array(self) -> np.ndarray:
        return np.stack([f.validity for f in self.frames])

    def with_frames(self, positions: np.ndarray, validity: np.ndarray) -> "MotionSequence":
        frames = tuple(
            Pose(positions=positions[i], validity=validity[i]) for i in range(len(positions))
        )
        return MotionSequence(descriptor=self.descriptor, fps=self.fps, frames=frames)


@dataclass(frozen=True)
class BoneLengths:
    """Per-bone lengths keyed by (parent, child) joint indices.

    Bones whose endpoints are never simultaneously valid get length 0 and
    appear in `missing`.
    """

    lengths: dict[tuple[int, int], float]
    missing: frozenset[tuple[int, int]] = frozenset()

    def get(self, bone: tuple[int, int]) -> float:
        return self.lengths[bone]


# ---------------------------------------------------------------------------
# Sequence operations
# ---------------------------------------------------------------------------


def bone_lengths(seq: MotionSequence) -> BoneLengths:
    """Median per-bone segment length over frames with both endpoints valid.

    The median keeps single-frame tracking glitches out of the estimate.
    """
    pos = seq.positions_array()
    val = seq.validity_array()
    lengths: dict[tuple[int, int], float] = {}
    missing = set()
    for p, c in seq.descriptor.bones:
        ok = val[:, p] & val[:, c]
        if not ok.any():
            lengths[(p, c)] = 0.0
            missing.add((p, c))
            continue
        d = np.linalg.norm(pos[ok, p] - pos[ok, c], axis=1)
        lengths[(p, c)] = float(np.median(d))
    return BoneLengths(lengths=lengths, missing=frozenset(missing))


def canonical_bone_lengths(seq: MotionSequence) -> dict[str, float]:
    """Median lengths of the canonical-role segments, keyed "parent-child".

    Only segments with both roles present in the format and co-valid in at
    least one frame are returned. These are the lengths the reconstruction
    chain consumes.
    """
    desc = seq.descriptor
    pairs = canonical_segments(desc)
    pos_frames = []
    val_frames = []
    for frame in seq.frames:
        p, v = desc.canonical_positions(frame)
        pos_frames.append(p)
        val_frames.append(v)
    pos = np.stack(pos_frames)
    val = np.stack(val_frames)
    out: dict[str, float] = {}
    for a, b in pairs:
        ia, ib = ROLE_INDEX[a], ROLE_INDEX[b]
        ok = val[:, ia] & val[:, ib]
        if ok.any():
            out[f"{a}-{b}"] = float(np.median(np.linalg.norm(pos[ok, ia] - pos[ok, ib], axis=1)))
    return out


def canonical_segments(desc: KeypointSetDescriptor) -> list[tuple[str, str]]:
    """Canonical parent-child segments available in a format."""
    has = desc.has_role
    pairs: list[tuple[str, str]] = []
    if has("spine_mid"):
        pairs += [("pelvis", "spine_mid"), ("spine_mid", "spine_top")]
    elif has("spine_top"):
        pairs += [("pelvis", "spine_top")]
    for side in ("left", "right"):
        if has(f"{side}_hip"):
            pairs.append(("pelvis", f"{side}_hip"))
        for a, b in (
            (f"{side}_hip", f"{side}_knee"),
            (f"{side}_knee", f"{side}_ankle"),
            (f"{side}_shoulder", f"{side}_elbow"),
            (f"{side}_elbow", f"{side}_wrist"),
            (f"{side}_wrist", f"{side}_thumb"),
        ):
            if has(a) and has(b):
                pairs.append((a, b))
        if has("spine_top") and has(f"{side}_shoulder"):
            pairs.append(("spine_top", f"{side}_shoulder"))
        if has(f"{side}_ankle"):
            if has(f"{side}_foot_base"):
                pairs.append((f"{side}_ankle", f"{side}_foot_base"))
                if has(f"{side}_toes"):
                    pairs.append((f"{side}_foot_base", f"{side}_toes"))
            elif has(f"{side}_toes"):
                pairs.append((f"{side}_ankle", f"{side}_toes"))
    if has("spine_top") and has("head"):
        pairs.append(("spine_top", "head"))
    if has("head"):
        for side in ("left", "right"):
            if has(f"{side}_ear"):
                pairs.append(("head", f"{side}_ear"))
    return pairs


def skeleton_height(seq: MotionSequence) -> float:
    """Scale estimate: the largest inter-joint distance seen in the sequence.

    Orientation-free, so it is usable as the denominator of relative
    reconstruction errors.
    """
    best = 0.0
    for frame in seq.frames:
        pos = frame.positions[frame.validity]
        if len(pos) < 2:
            continue
        lo = pos.min(axis=0)
        hi = pos.max(axis=0)
        best = max(best, float(np.linalg.norm(hi - lo)))
    return best


def resample(seq: MotionSequence, target_len: int = 200) -> MotionSequence:
    """Length-normalize a sequence to exactly target_len frames.

    Output frame t samples source time t*(N-1)/(T-1) with per-coordinate
    linear interpolation; first/last frames are preserved exactly, and a
    value interpolated between a valid and an invalid sample is invalid.
    fps metadata is carried through unchanged.
    """
    if len(seq) == 0:
        raise StructuralError("cannot resample an empty sequence")
    if target_len < 1:
        raise ValueError("target_len must be >= 1")
    n = len(seq)
    pos = seq.positions_array()
    val = seq.validity_array()
    out_pos = np.zeros((target_len, seq.descriptor.joint_count, 3))
    out_val = np.zeros((target_len, seq.descriptor.joint_count), dtype=bool)
    for t in range(target_len):
        if target_len == 1:
            src = 0.0
        else:
            src = t * (n - 1) / (target_len - 1)
        lo = int(np.floor(src))
        hi = min(lo + 1, n - 1)
        w = src - lo
        if w == 0.0 or lo == hi:
            # exact sample: copy bitwise
            out_pos[t] = pos[lo]
            out_val[t] = val[lo]
        else:
            out_pos[t] = (1.0 - w) * pos[lo] + w * pos[hi]
            out_val[t] = val[lo] & val[hi]
    return seq.with_frames(out_pos, out_val)


def rotate_sequence(seq: MotionSequence, transform: RigidTransform) -> MotionSequence:
    """Apply scale*R*p + t to every valid keypoint; validity is unchanged."""
    pos = seq.positions_array()
    val = seq.validity_array()
    moved = transform.apply(pos.reshape(-1, 3)).reshape(pos.shape)
    moved = np.where(val[..., None], moved, 0.0)
    return seq.with_frames(moved, val)


# ---------------------------------------------------------------------------
# Format registry
# ---------------------------------------------------------------------------


def _kinect25() -> KeypointSetDescriptor:
    names = (
        "spine_base", "spine_mid", "neck", "head",
        "shoulder_left", "elbow_left", "wrist_left", "hand_left",
        "shoulder_right", "elbow_right", "wrist_right", "hand_right",
        "hip_left", "knee_left", "ankle_left", "foot_left",
        "hip_right", "knee_right", "ankle_right", "foot_right",
        "spine_shoulder",
        "hand_tip_left", "thumb_left", "hand_tip_right", "thumb_right",
    )
    bones = (
        (0, 1), (1, 20), (20, 2), (2, 3),
        (20, 4), (4, 5), (5, 6), (6, 7), (7, 21), (6, 22),
        (20, 8), (8, 9), (9, 10), (10, 11), (11, 23), (10, 24),
        (0, 12), (12, 13), (13, 14), (14, 15),
        (0, 16), (16, 17), (17, 18), (18, 19),
    )
    cmap = {
        "pelvis": 0, "spine_mid": 1, "spine_top": 20, "head": 3,
        "left_shoulder": 4, "left_elbow": 5, "left_wrist": 6, "left_thumb": 22,
        "right_shoulder": 8, "right_elbow": 9, "right_wrist": 10, "right_thumb": 24,
        "left_hip": 12, "left_knee": 13, "left_ankle": 14, "left_toes": 15,
        "right_hip": 16, "right_knee": 17, "right_ankle": 18, "right_toes": 19,
    }
    return KeypointSetDescriptor(id="kinect25", joint_names=names, bones=bones,
                                 canonical_map=cmap, root=0)


def _openpose25() -> KeypointSetDescriptor:
    names = (
        "nose", "neck",
        "shoulder_right", "elbow_right", "wrist_right",
        "shoulder_left", "elbow_left", "wrist_left",
        "mid_hip",
        "hip_right", "knee_right", "ankle_right",
        "hip_left", "knee_left", "ankle_left",
        "eye_right", "eye_left", "ear_right", "ear_left",
        "big_toe_left", "small_toe_left", "heel_left",
        "big_toe_right", "small_toe_right", "heel_right",
    )
    bones = (
        (8, 1), (1, 0), (0, 15), (0, 16), (15, 17), (16, 18),
        (1, 2), (2, 3), (3, 4),
        (1, 5), (5, 6), (6, 7),
        (8, 9), (9, 10), (10, 11),
        (8, 12), (12, 13), (13, 14),
        (11, 22), (22, 23), (11, 24),
        (14, 19), (19, 20), (14, 21),
    )
    cmap = {
        "pelvis": 8, "spine_top": 1,
        "right_shoulder": 2, "right_elbow": 3, "right_wrist": 4,
        "left_shoulder": 5, "left_elbow": 6, "left_wrist": 7,
        "right_hip": 9, "right_knee": 10, "right_ankle": 11,
        "left_hip": 12, "left_knee": 13, "left_ankle": 14,
        "right_ear": 17, "left_ear": 18,
        "left_toes": 19, "left_foot_base": 21,
        "right_toes": 22, "right_foot_base": 24,
    }
    return KeypointSetDescriptor(id="openpose25", joint_names=names, bones=bones,
                                 canonical_map=cmap, root=8)


def _coco17() -> KeypointSetDescriptor:
    names = (
        "nose", "eye_left", "eye_right", "ear_left", "ear_right",
        "shoulder_left", "shoulder_right", "elbow_left", "elbow_right",
        "wrist_left", "wrist_right", "hip_left", "hip_right",
        "knee_left", "knee_right", "ankle_left", "ankle_right",
    )
    # COCO has neither a pelvis nor a neck joint; the tree is rooted at the
    # left hip, the closest joint to the kinematic root.
    bones = (
        (11, 12), (11, 13), (13, 15), (12, 14), (14, 16),
        (11, 5), (5, 6), (5, 7), (7, 9), (6, 8), (8, 10),
        (5, 0), (0, 1), (0, 2), (1, 3), (2, 4),
    )
    cmap = {
        "left_ear": 3, "right_ear": 4,
        "left_shoulder": 5, "right_shoulder": 6,
        "left_elbow": 7, "right_elbow": 8,
        "left_wrist": 9, "right_wrist": 10,
        "left_hip": 11, "right_hip": 12,
        "left_knee": 13, "right_knee": 14,
        "left_ankle": 15, "right_ankle": 16,
    }
    return KeypointSetDescriptor(id="coco17", joint_names=names, bones=bones,
                                 canonical_map=cmap, root=11)


_REGISTRY: dict[str, KeypointSetDescriptor] = {}


def register_format(descriptor: KeypointSetDescriptor) -> None:
    """Add a custom descriptor to the registry (ids must be unique)."""
    if descriptor.id in _REGISTRY:
        raise StructuralError(f"format {descriptor.id!r} is already registered")
    _REGISTRY[descriptor.id] = descriptor


def get_format(format_id: str) -> KeypointSetDescriptor:
    from .errors import UnsupportedFormatError

    try:
        return _REGISTRY[format_id]
    except KeyError:
        raise UnsupportedFormatError(
            f"unknown keypoint set {format_id!r}; known: {sorted(_REGISTRY)}"
        ) from None


def formats() -> list[str]:
    return sorted(_REGISTRY)


for _d in (_kinect25(), _openpose25(), _coco17()):
    _REGISTRY[_d.id] = _d
