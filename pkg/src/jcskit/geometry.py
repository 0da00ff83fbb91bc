"""Small 3D geometry helpers: unit vectors, elementary rotations, transforms.

Conventions used throughout the package:

* vectors are float64 arrays of shape (3,),
* rotation matrices act on column vectors (``R @ v``),
* frames are 3x3 matrices whose *columns* are the x, y, z axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFrameError

# Relative threshold below which cross products are treated as degenerate.
DEGENERACY_EPS = 1e-8


def as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


def normalize(v: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Unit vector along v; raises DegenerateFrameError for near-zero input."""
    v = as_vec3(v)
    n = float(np.linalg.norm(v))
    if n < eps:
        raise DegenerateFrameError("cannot normalize near-zero vector")
    return v / n


def safe_unit(v: np.ndarray) -> np.ndarray | None:
    """Like normalize() but returns None instead of raising."""
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n < 1e-12 or not np.isfinite(n):
        return None
    return v / n


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def axis_angle_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a (not necessarily unit) axis."""
    u = normalize(axis)
    x, y, z = u
    c, s = np.cos(angle), np.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


def minimal_rotation(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Smallest rotation carrying unit vector a onto unit vector b.

    Returns None when the vectors are anti-parallel (no unique choice).
    """
    a = as_vec3(a)
    b = as_vec3(b)
    axis = np.cross(a, b)
    s = float(np.linalg.norm(axis))
    c = float(np.dot(a, b))
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        return None
    return axis_angle_matrix(axis, float(np.arctan2(s, c)))


def signed_angle_about(a: np.ndarray, b: np.ndarray, axis: np.ndarray) -> float:
    """Signed angle from a to b about a unit axis (right-hand rule)."""
    return float(np.arctan2(np.dot(np.cross(a, b), axis), np.dot(a, b)))


def is_rotation(m: np.ndarray, tol: float = 1e-12) -> bool:
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        return False
    if not np.allclose(m.T @ m, np.eye(3), atol=tol):
        return False
    return abs(float(np.linalg.det(m)) - 1.0) <= tol


@dataclass(frozen=True)
class RigidTransform:
    """Global rotation + translation (+ optional uniform scale).

    rotation must be orthonormal with determinant +1 (checked to 1e-12).
    """

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: float = 1.0

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64)
        translation = as_vec3(self.translation)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)
        if not is_rotation(rotation, tol=1e-12):
            raise ValueError("rotation must be orthonormal with det +1 (tol 1e-12)")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(rotation=np.eye(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply scale*R*p + t to an (..., 3) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        return self.scale * (pts @ self.rotation.T) + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Transform equivalent to applying `other` first, then `self`."""
        return RigidTransform(
            rotation=self.rotation @ other.rotation,
            translation=self.scale * (self.rotation @ other.translation) + self.translation,
            scale=self.scale * other.scale,
        )


def sample_rotation(max_radians: float, seed: int) -> RigidTransform:
    """Random rotation: axis uniform on the sphere, angle uniform in [-max, +max].

    Deterministic for a fixed seed. Translation is zero, scale is 1.
    """
    if max_radians < 0:
        raise ValueError("max_radians must be >= 0")
    rng = np.random.default_rng(seed)
    axis = rng.normal(size=3)
    while float(np.linalg.norm(axis)) < 1e-12:  # astronomically unlikely
        axis = rng.normal(size=3)
    angle = rng.uniform(-max_radians, max_radians) if max_radians > 0 else 0.0
    if max_radians == 0.0:
        return RigidTransform.identity()
    return RigidTransform(rotation=axis_angle_matrix(axis, angle))
