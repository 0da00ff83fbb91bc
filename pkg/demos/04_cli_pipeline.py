"""Drive the command-line pipeline end to end in a temp directory.

convert -> reconstruct --verify -> augment --check-invariance -> report,
the same flow a shell pipeline would use, including the length
normalization to 200 frames.
"""

import importlib.util
import json
import pathlib
import subprocess
import sys
import tempfile

from jcskit.io import dump_sequence

_demo1 = importlib.util.spec_from_file_location(
    "demo1", pathlib.Path(__file__).with_name("01_keypoints_to_angles.py"))
demo1 = importlib.util.module_from_spec(_demo1)
_demo1.loader.exec_module(demo1)


def run(*argv):
    print(f"$ jcskit {' '.join(argv)}")
    res = subprocess.run([sys.executable, "-m", "jcskit", *argv],
                         capture_output=True, text=True)
    if res.stdout.strip():
        print(res.stdout.strip()[:400])
    if res.returncode != 0:
        print(res.stderr.strip())
    print()
    return res


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        src = tmp / "moves.json"
        src.write_bytes(dump_sequence(demo1.arm_raise_sequence(n_frames=37)))

        run("inspect", str(src))
        run("convert", str(src), "--resample", "200", "-o", str(tmp / "angles.json"))
        doc = json.loads((tmp / "angles.json").read_text())
        print(f"-> angle file: {len(doc['frames'])} frames x {len(doc['layout'])} channels\n")

        run("convert", str(src), "-o", str(tmp / "angles_raw.json"))
        run("reconstruct", str(tmp / "angles_raw.json"),
            "-o", str(tmp / "rebuilt.json"), "--verify", str(src))
        run("augment", str(src), "-o", str(tmp / "aug"), "--count", "3",
            "--max-radians", "0.8", "--seed", "1", "--check-invariance")
        run("report", str(src))


if __name__ == "__main__":
    main()
