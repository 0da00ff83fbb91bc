"""Angles do not move when the camera does.

Rotating, translating and rescaling the keypoints changes every raw
coordinate, but the joint-angle channels stay put to machine precision.
"""

import importlib.util
import pathlib

import numpy as np

from jcskit import RigidTransform, rotate_sequence, sample_rotation, sequence_to_angles

_demo1 = importlib.util.spec_from_file_location(
    "demo1", pathlib.Path(__file__).with_name("01_keypoints_to_angles.py"))
demo1 = importlib.util.module_from_spec(_demo1)
_demo1.loader.exec_module(demo1)


def circular_shift(a, b):
    """Largest per-channel angle distance, wrap-aware at the +-pi cut."""
    both = np.isfinite(a) & np.isfinite(b)
    d = np.abs(a[both] - b[both])
    return float(np.max(np.minimum(d, 2 * np.pi - d)))


def main():
    seq = demo1.arm_raise_sequence()
    reference = sequence_to_angles(seq).values

    print("rotation magnitude | raw keypoint shift | angle channel shift")
    for max_rad in (0.1, 0.3, 0.8, 3.1):
        transform = sample_rotation(max_rad, seed=7)
        moved = rotate_sequence(seq, transform)
        kp_shift = float(np.max(np.abs(moved.positions_array() - seq.positions_array())))
        values = sequence_to_angles(moved).values
        print(f"  {max_rad:14.1f} rad | {kp_shift:18.3f} | {circular_shift(reference, values):.2e}")

    transform = RigidTransform(rotation=np.eye(3), translation=np.array([5.0, -2.0, 1.0]),
                               scale=1.7)
    moved = rotate_sequence(seq, transform)
    values = sequence_to_angles(moved).values
    print(f"\ntranslated by (5, -2, 1) and scaled x1.7: "
          f"angle shift {circular_shift(reference, values):.2e}")


if __name__ == "__main__":
    main()
