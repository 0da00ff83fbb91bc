"""Register a custom keypoint format and convert it.

Any marker set with a bone tree and a mapping into the canonical joint
roles gets the full pipeline: here, a minimal 11-point upper-body rig.
"""

import json

import numpy as np

from jcskit import (
    KeypointSetDescriptor,
    parse_sequence,
    register_format,
    sequence_to_angles,
    structural_layout,
)


def main():
    desc = KeypointSetDescriptor(
        id="upper11",
        joint_names=(
            "pelvis", "chest", "neck_base",
            "l_shoulder", "l_elbow", "l_hand",
            "r_shoulder", "r_elbow", "r_hand",
            "l_hip", "r_hip",
        ),
        bones=(
            (0, 1), (1, 2),
            (2, 3), (3, 4), (4, 5),
            (2, 6), (6, 7), (7, 8),
            (0, 9), (0, 10),
        ),
        canonical_map={
            "pelvis": 0, "spine_mid": 1, "spine_top": 2,
            "left_shoulder": 3, "left_elbow": 4, "left_wrist": 5,
            "right_shoulder": 6, "right_elbow": 7, "right_wrist": 8,
            "left_hip": 9, "right_hip": 10,
        },
    )
    register_format(desc)
    print(f"registered {desc.id!r}; channels it can produce:")
    for owner, channel in structural_layout(desc):
        print(f"  {owner}.{channel}")

    rng = np.random.default_rng(3)
    pose = np.array([
        [0.0, 1.0, 0.0], [0.0, 1.3, 0.0], [0.0, 1.55, 0.0],
        [0.0, 1.5, -0.2], [0.2, 1.45, -0.3], [0.4, 1.4, -0.3],
        [0.0, 1.5, 0.2], [0.2, 1.45, 0.3], [0.4, 1.4, 0.3],
        [0.0, 1.0, -0.1], [0.0, 1.0, 0.1],
    ])
    frames = [(pose + rng.normal(scale=0.01, size=pose.shape)).tolist() for _ in range(5)]
    seq = parse_sequence(json.dumps(
        {"format": "upper11", "fps": 20, "frames": frames}).encode())
    aseq = sequence_to_angles(seq)
    print(f"\nconverted {len(aseq)} frames; right elbow flexion (degrees): "
          + ", ".join(f"{np.degrees(v):.1f}"
                      for v in aseq.values[:, aseq.layout.index(('right_elbow', 'flexion'))]))


if __name__ == "__main__":
    main()
