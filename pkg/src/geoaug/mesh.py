"""Marching-cubes extraction from a signed-distance field and brute-force
ray/triangle intersection used as the visibility oracle."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from skimage import measure

from .errors import ParameterError
from .sdf import SdfField, sdf_normals

DEFAULT_RESOLUTION = 64
_MIN_AREA = 1e-12


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray
    voxel_size: float = 0.0

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def empty(self) -> bool:
        return len(self.triangles) == 0

    def to_obj(self, path) -> None:
        lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in self.vertices.tolist()]
        lines += [f"vn {x!r} {y!r} {z!r}" for x, y, z in self.normals.tolist()]
        lines += [f"f {a}//{a} {b}//{b} {c}//{c}" for a, b, c in (self.triangles + 1).tolist()]
        Path(path).write_text("\n".join(lines) + "\n")


def _empty_mesh(voxel: float) -> TriangleMesh:
    return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), np.zeros((0, 3)), voxel)


def lattice(field: SdfField, resolution: int):
    """Sample positions of a ``resolution**3`` lattice covering the field's
    bounding box padded by one voxel.  Returns ``(origin, spacing)``."""
    if resolution < 8:
        raise ParameterError("marching-cubes resolution must be at least 8")
    if not field.bounded:
        raise ParameterError("marching cubes needs a finite bounding box")
    spacing = (field.hi - field.lo) / (resolution - 3)
    return field.lo - spacing, spacing


def marching_cubes(field: SdfField, resolution: int = DEFAULT_RESOLUTION) -> TriangleMesh:
    """Zero level set of ``field`` with the classic 256-case table."""
    origin, spacing = lattice(field, resolution)
    voxel = float(spacing.max())
    axes = [origin[i] + spacing[i] * np.arange(resolution) for i in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    values = field.distance(grid)
    if not (values.min() < 0.0 < values.max()):
        return _empty_mesh(voxel)
    verts, faces, _, _ = measure.marching_cubes(
        values, level=0.0, spacing=tuple(spacing), method="lorensen", gradient_direction="ascent"
    )
    verts = verts.astype(float) + origin
    faces = faces.astype(np.int64)

    a, b, c = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    faces = faces[area >= _MIN_AREA]
    used = np.unique(faces)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    faces = remap[faces]
    normals = sdf_normals(field, verts) if len(verts) else np.zeros((0, 3))
    return TriangleMesh(verts, faces, normals, voxel)


@numba.njit(cache=True)
def _intersect_kernel(v0, e1, e2, origins, dirs, t_min, t_out, idx_out):
    n_tri = v0.shape[0]
    for r in range(origins.shape[0]):
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        best = np.inf
        best_i = -1
        for i in range(n_tri):
            ax, ay, az = e1[i, 0], e1[i, 1], e1[i, 2]
            bx, by, bz = e2[i, 0], e2[i, 1], e2[i, 2]
            # p = d x e2
            px = dy * bz - dz * by
            py = dz * bx - dx * bz
            pz = dx * by - dy * bx
            det = ax * px + ay * py + az * pz
            if abs(det) < 1e-14:
                continue
            inv = 1.0 / det
            sx = ox - v0[i, 0]
            sy = oy - v0[i, 1]
            sz = oz - v0[i, 2]
            u = (sx * px + sy * py + sz * pz) * inv
            if u < 0.0 or u > 1.0:
                continue
            qx = sy * az - sz * ay
            qy = sz * ax - sx * az
            qz = sx * ay - sy * ax
            v = (dx * qx + dy * qy + dz * qz) * inv
            if v < 0.0 or u + v > 1.0:
                continue
            t = (bx * qx + by * qy + bz * qz) * inv
            if t > t_min and t < best:
                best = t
                best_i = i
        t_out[r] = best if best_i >= 0 else np.nan
        idx_out[r] = best_i


def mesh_intersect_batch(mesh: TriangleMesh, origins, dirs, t_min: float = 0.0):
    """Nearest hit ``t > t_min`` for each ray over every triangle.

    Returns ``(t, triangle_index)``; misses give ``nan`` and ``-1``.
    """
    if t_min < 0:
        raise ParameterError("t_min must be non-negative")
    origins = np.ascontiguousarray(np.asarray(origins, dtype=float).reshape(-1, 3))
    dirs = np.ascontiguousarray(np.asarray(dirs, dtype=float).reshape(-1, 3))
    n = len(origins)
    t_out = np.full(n, np.nan)
    idx_out = np.full(n, -1, dtype=np.int64)
    if mesh.empty or n == 0:
        return t_out, idx_out
    tri = mesh.vertices[mesh.triangles]
    v0 = np.ascontiguousarray(tri[:, 0])
    e1 = np.ascontiguousarray(tri[:, 1] - tri[:, 0])
    e2 = np.ascontiguousarray(tri[:, 2] - tri[:, 0])
    _intersect_kernel(v0, e1, e2, origins, dirs, float(t_min), t_out, idx_out)
    return t_out, idx_out


def mesh_ray_intersect(mesh: TriangleMesh, ray, t_min: float = 0.0):
    """``(t, triangle_index)`` of the nearest hit beyond ``t_min``, or ``None``."""
    t, idx = mesh_intersect_batch(mesh, ray.origin, ray.direction, t_min)
    if idx[0] < 0:
        return None
    return float(t[0]), int(idx[0])


def surface_points(mesh: TriangleMesh, max_points: int, seed: int = 0):
    """Vertices (with normals) to seed augmentation.

    Returns ``(indices, positions, normals)``.  All vertices in original
    order when they fit the budget, otherwise a seeded uniform subsample
    without replacement, kept in ascending index order.
    """
    if max_points < 1:
        raise ParameterError("max_points must be at least 1")
    n = mesh.n_vertices
    if n <= max_points:
        idx = np.arange(n)
    else:
        idx = np.sort(np.random.default_rng(seed).choice(n, size=max_points, replace=False))
    return idx, mesh.vertices[idx], mesh.normals[idx]
