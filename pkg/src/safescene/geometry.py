"""Pinhole camera model and rigid-transform algebra.

Coordinate conventions used everywhere in this package:

  base frame:   robot base, meters, z up.
  camera frame: x right, y down, z forward along the optical axis (meters).
  image frame:  u right, v down, pixels, origin at the top-left corner.

A RigidTransform maps camera-frame points into the base frame (the
camera's pose expressed in the base frame). The opposite direction is
always derived with invert(), never stored, so there is exactly one
convention to get wrong.

All values are immutable after construction and every operation here is
a pure function; everything is safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    IntersectionBehindCamera,
    NonPositiveDepth,
    PointBehindCamera,
    RayParallelToPlane,
)

# Constructors reject rotations with orthonormality residual above this.
ORTHONORMALITY_TOL = 1e-6
_PARALLEL_EPS = 1e-12
_BEHIND_EPS = 1e-12


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Zero-distortion pinhole intrinsics, all in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        _require_finite("intrinsics", self.fx, self.fy, self.cx, self.cy)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if not (0 <= self.cx < self.width):
            raise ValueError(f"cx={self.cx} outside [0, {self.width})")
        if not (0 <= self.cy < self.height):
            raise ValueError(f"cy={self.cy} outside [0, {self.height})")


@dataclass(frozen=True)
class PixelPoint:
    """Sub-pixel image coordinates; may lie outside the image bounds."""

    u: float
    v: float

    def __post_init__(self) -> None:
        _require_finite("pixel", self.u, self.v)


@dataclass(frozen=True)
class BasePoint:
    """A point in the robot base frame, meters."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        _require_finite("point", self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a: Sequence[float]) -> "BasePoint":
        return BasePoint(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class TablePlane:
    """Horizontal plane z = z0 in the base frame; the depth-free fallback."""

    z0: float

    def __post_init__(self) -> None:
        _require_finite("plane height", self.z0)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation + translation mapping camera-frame points to base-frame points."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("transform entries must be finite")
        residual = float(np.abs(r.T @ r - np.eye(3)).max())
        if residual > ORTHONORMALITY_TOL:
            raise ValueError(f"rotation is not orthonormal (residual {residual:.3e})")
        det = float(np.linalg.det(r))
        if abs(det - 1.0) > ORTHONORMALITY_TOL:
            raise ValueError(f"rotation must be proper (det {det:.9f}), reflections rejected")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    __hash__ = None  # type: ignore[assignment]

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "RigidTransform":
        return RigidTransform(np.eye(3), np.array([x, y, z], dtype=float))

    def apply(self, p: np.ndarray) -> np.ndarray:
        """Map a 3-vector (or Nx3 array) through the transform."""
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.T + self.translation

    def apply_point(self, p: BasePoint) -> BasePoint:
        return BasePoint.from_array(self.apply(p.as_array()))


def rotation_about(axis: Sequence[float], angle: float) -> np.ndarray:
    """Rotation matrix about an arbitrary unit axis (Rodrigues form)."""
    a = np.asarray(axis, dtype=float)
    n = float(np.linalg.norm(a))
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("rotation axis must be a nonzero finite vector")
    x, y, z = a / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform applying b first, then a:  p -> a(b(p))."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(a: RigidTransform) -> RigidTransform:
    rt = a.rotation.T
    return RigidTransform(rt, -(rt @ a.translation))


def back_project_depth(
    px: PixelPoint, depth: float, cam: CameraIntrinsics, ext: RigidTransform
) -> BasePoint:
    """Lift a pixel with a measured depth to a base-frame point.

    depth is the camera-frame z of the observed point, not the ray length.
    """
    if not (depth > 0) or not math.isfinite(depth):
        raise NonPositiveDepth(f"depth must be > 0, got {depth!r}")
    x = (px.u - cam.cx) / cam.fx * depth
    y = (px.v - cam.cy) / cam.fy * depth
    return BasePoint.from_array(ext.apply(np.array([x, y, depth])))


def back_project_plane(
    px: PixelPoint, plane: TablePlane, cam: CameraIntrinsics, ext: RigidTransform
) -> BasePoint:
    """Intersect the pixel's viewing ray with the horizontal plane z = z0."""
    dir_cam = np.array([(px.u - cam.cx) / cam.fx, (px.v - cam.cy) / cam.fy, 1.0])
    origin = ext.translation
    direction = ext.rotation @ dir_cam
    if abs(direction[2]) < _PARALLEL_EPS:
        raise RayParallelToPlane(f"ray z-component {direction[2]!r} below {_PARALLEL_EPS}")
    s = (plane.z0 - origin[2]) / direction[2]
    if s <= 0:
        raise IntersectionBehindCamera(f"intersection parameter {s!r} is not positive")
    return BasePoint.from_array(origin + s * direction)


def project(p: BasePoint, cam: CameraIntrinsics, ext: RigidTransform) -> PixelPoint:
    """Project a base-frame point into the image."""
    p_cam = invert(ext).apply(p.as_array())
    z = p_cam[2]
    if z <= _BEHIND_EPS:
        raise PointBehindCamera(f"camera-frame z {z!r} is not in front of the camera")
    return PixelPoint(cam.fx * p_cam[0] / z + cam.cx, cam.fy * p_cam[1] / z + cam.cy)


def camera_depth(p: BasePoint, ext: RigidTransform) -> float:
    """Camera-frame z of a base-frame point (the depth a sensor would report)."""
    return float(invert(ext).apply(p.as_array())[2])
