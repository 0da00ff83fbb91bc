"""Convert a keypoint sequence into biomechanical joint-angle channels.

Builds a tiny Kinect-25 sequence in memory (a subject raising the right arm
from a T-pose), converts it, and walks through the resulting channel layout.
"""

import json

import numpy as np

from jcskit import get_format, parse_sequence, sequence_to_angles


def arm_raise_sequence(n_frames=8):
    """T-pose with the right arm sweeping from lateral to overhead."""
    desc = get_format("kinect25")
    frames = []
    for t in np.linspace(0.0, 1.0, n_frames):
        pose = np.zeros((25, 3))
        pose[0] = [0.0, 1.0, 0.0]       # spine base (pelvis)
        pose[1] = [0.0, 1.25, 0.0]      # spine mid
        pose[20] = [0.0, 1.5, 0.0]      # spine shoulder
        pose[2] = [0.0, 1.6, 0.0]       # neck
        pose[3] = [0.0, 1.75, 0.0]      # head
        for sign, sh, el, wr, hand, tip, thumb in ((-1, 4, 5, 6, 7, 21, 22),
                                                   (+1, 8, 9, 10, 11, 23, 24)):
            pose[sh] = [0.0, 1.5, sign * 0.2]
            angle = t * np.pi / 2 if sign > 0 else 0.0  # right arm sweeps up
            direction = np.array([0.0, np.sin(angle), sign * np.cos(angle)])
            pose[el] = pose[sh] + 0.3 * direction
            pose[wr] = pose[el] + 0.25 * direction
            pose[hand] = pose[wr] + 0.05 * direction
            pose[tip] = pose[wr] + 0.1 * direction
            pose[thumb] = pose[wr] + [0.07, 0.0, 0.0]
        for sign, hip, knee, ankle, foot in ((-1, 12, 13, 14, 15), (+1, 16, 17, 18, 19)):
            pose[hip] = [0.0, 1.0, sign * 0.1]
            pose[knee] = pose[hip] - [0.0, 0.45, 0.0]
            pose[ankle] = pose[knee] - [0.0, 0.45, 0.0]
            pose[foot] = pose[ankle] + [0.15, 0.0, 0.0]
        frames.append(pose.tolist())
    return parse_sequence(json.dumps(
        {"format": "kinect25", "fps": 30, "frames": frames}).encode())


def main():
    seq = arm_raise_sequence()
    print(f"input: {len(seq)} frames of {seq.descriptor.joint_count} keypoints "
          f"({seq.descriptor.id})")

    aseq = sequence_to_angles(seq)
    print(f"output: {aseq.channel_count} angle channels per frame "
          f"(vs {seq.descriptor.joint_count * 3} raw values)\n")

    print("channel layout:")
    for i, (owner, channel) in enumerate(aseq.layout):
        print(f"  {i:2d}  {owner}.{channel}")

    col = aseq.layout.index(("right_shoulder", "abduction"))
    print("\nright shoulder abduction across the sweep (degrees):")
    print("  " + "  ".join(f"{np.degrees(v):6.1f}" for v in aseq.values[:, col]))

    col = aseq.layout.index(("left_shoulder", "abduction"))
    print("left shoulder abduction (stays in T-pose):")
    print("  " + "  ".join(f"{np.degrees(v):6.1f}" for v in aseq.values[:, col]))


if __name__ == "__main__":
    main()
