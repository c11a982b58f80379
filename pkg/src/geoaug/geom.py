"""Rays, rigid transforms and pinhole cameras.

Camera frame: +x right, +y down, +z forward.  Pixel centers sit at integer
coordinates with (0, 0) the top-left pixel center.  Poses are stored
world-from-camera.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .sh import unit


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "direction", unit(np.asarray(self.direction, dtype=float).reshape(3)))

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9) or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ParameterError("rotation must be orthonormal with det +1")
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, m) -> "RigidTransform":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        """3x4 ``[R | t]``."""
        return np.hstack([self.rotation, self.translation[:, None]])

    def apply(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.T + self.translation

    def apply_dir(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.rotation.T

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """``self ∘ other``: apply ``other`` first."""
        return RigidTransform(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def equals(self, other: "RigidTransform") -> bool:
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(self.translation, other.translation)


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> RigidTransform:
    """World-from-camera pose of a camera at ``eye`` looking at ``target``."""
    eye = np.asarray(eye, dtype=float)
    fwd = unit(np.asarray(target, dtype=float) - eye)
    right = np.cross(fwd, np.asarray(up, dtype=float))
    if np.linalg.norm(right) < 1e-12:
        raise ParameterError("look direction is parallel to the up vector")
    right = unit(right)
    down = np.cross(fwd, right)
    return RigidTransform(np.column_stack([right, down, fwd]), eye)


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_from_camera: RigidTransform = field(default_factory=RigidTransform)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ParameterError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ParameterError("principal point must lie inside the image")

    @property
    def center(self) -> np.ndarray:
        return np.array(self.world_from_camera.translation)

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def camera_from_world(self) -> RigidTransform:
        return self.world_from_camera.inverse()

    def same_as(self, other: "PinholeCamera") -> bool:
        return (
            (self.fx, self.fy, self.cx, self.cy, self.width, self.height)
            == (other.fx, other.fy, other.cx, other.cy, other.width, other.height)
            and self.world_from_camera.equals(other.world_from_camera)
        )

    def in_bounds(self, pixel) -> np.ndarray:
        """True where a (continuous) pixel position lies within the image's
        pixel-center extent ``[0, width-1] x [0, height-1]``."""
        pixel = np.asarray(pixel, dtype=float)
        u, v = pixel[..., 0], pixel[..., 1]
        return (u >= 0) & (u <= self.width - 1) & (v >= 0) & (v <= self.height - 1)

    def to_record(self) -> str:
        vals = [self.fx, self.fy, self.cx, self.cy, self.width, self.height]
        vals += list(self.world_from_camera.matrix().ravel())
        return " ".join(repr(float(v)) if i not in (4, 5) else str(int(v)) for i, v in enumerate(vals))

    @classmethod
    def from_record(cls, line: str) -> "PinholeCamera":
        parts = line.split()
        if len(parts) != 18:
            raise ParameterError(f"camera record needs 18 fields, got {len(parts)}")
        fx, fy, cx, cy = (float(v) for v in parts[:4])
        w, h = int(parts[4]), int(parts[5])
        m = np.array([float(v) for v in parts[6:]]).reshape(3, 4)
        return cls(fx, fy, cx, cy, w, h, RigidTransform.from_matrix(m))


def project(cam: PinholeCamera, p_world):
    """Project world points.

    Returns ``(pixel, depth, in_front)`` with shapes ``(..., 2)``, ``(...)``
    and ``(...)``.  Points with ``depth <= 0`` are flagged ``in_front=False``
    and their pixel coordinates are NaN; callers filter on the flag.
    """
    pc = cam.camera_from_world.apply(p_world)
    z = pc[..., 2]
    in_front = z > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.fx * pc[..., 0] / z + cam.cx
        v = cam.fy * pc[..., 1] / z + cam.cy
    pixel = np.stack([u, v], axis=-1)
    pixel = np.where(in_front[..., None], pixel, np.nan)
    return pixel, z, in_front


def back_project(cam: PinholeCamera, pixel, depth) -> np.ndarray:
    """World point at z-depth ``depth`` along the ray through ``pixel``."""
    depth = np.asarray(depth, dtype=float)
    if np.any(~(depth > 0)):
        raise ParameterError("depth must be positive")
    pixel = np.asarray(pixel, dtype=float)
    x = (pixel[..., 0] - cam.cx) / cam.fx * depth
    y = (pixel[..., 1] - cam.cy) / cam.fy * depth
    pc = np.stack([x, y, np.broadcast_to(depth, x.shape)], axis=-1)
    return cam.world_from_camera.apply(pc)


def pixel_directions(cam: PinholeCamera, pixel) -> np.ndarray:
    """Unit world-space directions through (arrays of) pixels."""
    pixel = np.asarray(pixel, dtype=float)
    d = np.stack(
        [(pixel[..., 0] - cam.cx) / cam.fx, (pixel[..., 1] - cam.cy) / cam.fy, np.ones(pixel.shape[:-1])],
        axis=-1,
    )
    return unit(cam.world_from_camera.apply_dir(d))


def camera_ray(cam: PinholeCamera, pixel) -> Ray:
    pixel = np.asarray(pixel, dtype=float)
    if not cam.in_bounds(pixel):
        raise ParameterError(f"pixel {tuple(pixel)} outside a {cam.width}x{cam.height} image")
    return Ray(cam.center, pixel_directions(cam, pixel))


def pixel_grid(width: int, height: int) -> np.ndarray:
    """``(height, width, 2)`` array of integer pixel centers as floats."""
    v, u = np.mgrid[0:height, 0:width]
    return np.stack([u, v], axis=-1).astype(float)


def relative_transform(ref: PinholeCamera, unseen: PinholeCamera) -> RigidTransform:
    """``camera_from_world(unseen) ∘ world_from_camera(ref)``; exact identity
    when both poses are equal."""
    if ref.world_from_camera.equals(unseen.world_from_camera):
        return RigidTransform.identity()
    return unseen.camera_from_world @ ref.world_from_camera
