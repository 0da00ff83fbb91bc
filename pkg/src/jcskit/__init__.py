"""Biomechanical joint angles from 3D skeleton keypoints, and back.

The package converts keypoint sequences (Kinect v2, OpenPose BODY_25,
COCO-17, or custom formats) into ISB-style flexion / abduction / axial
rotation channels defined through per-joint local coordinate systems, and
inverts the mapping given bone lengths and the root pose. Angles are
invariant under camera rotation, translation and uniform scale, and
left/right mirror symmetric by construction.
"""

from .angles import (
    AngleSequence,
    FrameAngles,
    adjacent_bone_pairs,
    anatomical_flexion,
    ankle_angles,
    axial_rotation,
    baseline_pair_labels,
    dot_product_baseline,
    extract_pose_angles,
    hinge_flexion,
    sequence_to_angles,
    spherical_x,
    spherical_z,
    spine_angles,
    structural_layout,
)
from .errors import (
    DegenerateFrameError,
    DomainError,
    InternalConsistencyError,
    JcskitError,
    ParseError,
    ReconstructionGapError,
    StructuralError,
    UnsupportedFormatError,
)
from .frames import Frame3, JcsSet, build_frame, compute_jcs
from .geometry import RigidTransform, sample_rotation
from .io import (
    angles_to_csv,
    dump_angles,
    dump_baseline,
    dump_sequence,
    parse_angles,
    parse_sequence,
)
from .reconstruct import (
    FkChain,
    FkStep,
    angles_to_canonical,
    angles_to_sequence,
    build_chain,
    canonical_to_pose,
    sequence_roundtrip_report,
    unreconstructable_joints,
)
from .skeleton import (
    BoneLengths,
    KeypointSetDescriptor,
    MotionSequence,
    Pose,
    ROLES,
    bone_lengths,
    canonical_bone_lengths,
    formats,
    get_format,
    register_format,
    resample,
    rotate_sequence,
    skeleton_height,
)

__version__ = "0.1.0"

__all__ = [
    "AngleSequence",
    "BoneLengths",
    "DegenerateFrameError",
    "DomainError",
    "FkChain",
    "FkStep",
    "Frame3",
    "FrameAngles",
    "InternalConsistencyError",
    "JcsSet",
    "JcskitError",
    "KeypointSetDescriptor",
    "MotionSequence",
    "ParseError",
    "Pose",
    "ReconstructionGapError",
    "RigidTransform",
    "ROLES",
    "StructuralError",
    "UnsupportedFormatError",
    "adjacent_bone_pairs",
    "anatomical_flexion",
    "angles_to_canonical",
    "angles_to_csv",
    "angles_to_sequence",
    "ankle_angles",
    "axial_rotation",
    "baseline_pair_labels",
    "bone_lengths",
    "build_chain",
    "build_frame",
    "canonical_bone_lengths",
    "canonical_to_pose",
    "compute_jcs",
    "dot_product_baseline",
    "dump_angles",
    "dump_baseline",
    "dump_sequence",
    "extract_pose_angles",
    "formats",
    "get_format",
    "hinge_flexion",
    "parse_angles",
    "parse_sequence",
    "register_format",
    "resample",
    "rotate_sequence",
    "sample_rotation",
    "sequence_roundtrip_report",
    "sequence_to_angles",
    "skeleton_height",
    "spherical_x",
    "spherical_z",
    "spine_angles",
    "structural_layout",
    "unreconstructable_joints",
]
