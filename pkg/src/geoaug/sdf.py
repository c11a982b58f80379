"""Signed-distance fields and sphere tracing.

All fields evaluate batches: ``distance(p)`` takes ``(..., 3)`` points and
returns ``(...)`` values, negative inside.  Every field declares an
axis-aligned bounding box; a ray leaving it is treated as escaped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateNormalError, ParameterError
from .sh import unit

DEFAULT_MAX_STEPS = 128
DEFAULT_TRACE_STEPS = 256
_INF3 = np.full(3, np.inf)


class SdfField:
    """Base class.  Subclasses implement :meth:`distance` and set ``lo``/``hi``."""

    kind = "field"
    # multiplier on the sphere-tracing step; 1 for exact SDFs
    step_scale = 1.0
    lo: np.ndarray
    hi: np.ndarray

    def distance(self, p) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, p) -> np.ndarray:
        return self.distance(p)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.lo, self.hi

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    @property
    def diagonal(self) -> float:
        if not self.bounded:
            raise ParameterError(f"{self.kind} field has no finite bounding box")
        return float(np.linalg.norm(self.hi - self.lo))

    def default_eps(self) -> float:
        return 1e-4 * self.diagonal

    def contains(self, p, tol: float = 0.0) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.all((p >= self.lo - tol) & (p <= self.hi + tol), axis=-1)


def _vec(v, n=3) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(n)
    a.setflags(write=False)
    return a


class Sphere(SdfField):
    kind = "sphere"

    def __init__(self, center, radius: float):
        if not radius > 0:
            raise ParameterError("sphere radius must be positive")
        self.center = _vec(center)
        self.radius = float(radius)
        self.lo = self.center - self.radius
        self.hi = self.center + self.radius

    def distance(self, p):
        return np.linalg.norm(np.asarray(p, dtype=float) - self.center, axis=-1) - self.radius


class Box(SdfField):
    kind = "box"

    def __init__(self, center, half_extents):
        self.center = _vec(center)
        self.half_extents = _vec(half_extents)
        if np.any(self.half_extents <= 0):
            raise ParameterError("box half-extents must be positive")
        self.lo = self.center - self.half_extents
        self.hi = self.center + self.half_extents

    def distance(self, p):
        q = np.abs(np.asarray(p, dtype=float) - self.center) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside


class Plane(SdfField):
    """Half-space ``normal . p <= offset`` is solid."""

    kind = "plane"

    def __init__(self, normal, offset: float = 0.0):
        self.normal = _vec(unit(normal))
        self.offset = float(offset)
        self.lo = -_INF3
        self.hi = _INF3

    def distance(self, p):
        return np.asarray(p, dtype=float) @ self.normal - self.offset


class Capsule(SdfField):
    kind = "capsule"

    def __init__(self, a, b, radius: float):
        if not radius > 0:
            raise ParameterError("capsule radius must be positive")
        self.a = _vec(a)
        self.b = _vec(b)
        self.radius = float(radius)
        self.lo = np.minimum(self.a, self.b) - self.radius
        self.hi = np.maximum(self.a, self.b) + self.radius

    def distance(self, p):
        pa = np.asarray(p, dtype=float) - self.a
        ba = self.b - self.a
        denom = float(ba @ ba)
        h = np.clip(pa @ ba / denom, 0.0, 1.0) if denom > 0 else np.zeros(pa.shape[:-1])
        return np.linalg.norm(pa - h[..., None] * ba, axis=-1) - self.radius


class Union(SdfField):
    kind = "union"

    def __init__(self, members: Sequence[SdfField], bounds=None):
        if not members:
            raise ParameterError("union needs at least one member")
        self.members = tuple(members)
        self.step_scale = min(m.step_scale for m in self.members)
        if bounds is not None:
            self.lo, self.hi = _vec(bounds[0]), _vec(bounds[1])
        else:
            self.lo = np.min([m.lo for m in self.members], axis=0)
            self.hi = np.max([m.hi for m in self.members], axis=0)
        if not self.bounded:
            raise ParameterError("union containing an unbounded member needs explicit bounds")

    def member_distances(self, p) -> np.ndarray:
        """``(..., n_members)`` distances."""
        return np.stack([m.distance(p) for m in self.members], axis=-1)

    def nearest_member(self, p) -> np.ndarray:
        return np.argmin(self.member_distances(p), axis=-1)

    def distance(self, p):
        out = self.members[0].distance(p)
        for m in self.members[1:]:
            out = np.minimum(out, m.distance(p))
        return out


class GridField(SdfField):
    """Trilinear interpolation of samples on a regular lattice.

    ``values[i, j, k]`` is the sample at ``lo + (i, j, k) * spacing``.
    Queries outside the lattice clamp to its boundary.
    """

    kind = "grid"
    step_scale = 0.9

    def __init__(self, values, lo, hi):
        v = np.array(values, dtype=float)
        if v.ndim != 3 or min(v.shape) < 2:
            raise ParameterError("grid needs at least 2 samples per axis")
        if not np.all(np.isfinite(v)):
            raise ParameterError("grid values must be finite")
        v.setflags(write=False)
        self.values = v
        self.lo, self.hi = _vec(lo), _vec(hi)
        if np.any(self.hi <= self.lo):
            raise ParameterError("grid bounds must have hi > lo")
        self.spacing = (self.hi - self.lo) / (np.array(v.shape) - 1)

    @classmethod
    def sample(cls, field: SdfField, resolution: int, lo=None, hi=None) -> "GridField":
        lo = field.lo if lo is None else _vec(lo)
        hi = field.hi if hi is None else _vec(hi)
        axes = [np.linspace(lo[i], hi[i], resolution) for i in range(3)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(field.distance(pts), lo, hi)

    def distance(self, p):
        p = np.asarray(p, dtype=float)
        shape = np.array(self.values.shape)
        g = np.clip((p - self.lo) / self.spacing, 0.0, shape - 1)
        # snap round-off so lattice points return their stored samples exactly
        r = np.rint(g)
        g = np.where(np.abs(g - r) < 1e-9, r, g)
        i0 = np.minimum(np.floor(g).astype(int), shape - 2)
        f = g - i0
        v = self.values
        x0, y0, z0 = i0[..., 0], i0[..., 1], i0[..., 2]
        fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
        c00 = v[x0, y0, z0] * (1 - fx) + v[x0 + 1, y0, z0] * fx
        c10 = v[x0, y0 + 1, z0] * (1 - fx) + v[x0 + 1, y0 + 1, z0] * fx
        c01 = v[x0, y0, z0 + 1] * (1 - fx) + v[x0 + 1, y0, z0 + 1] * fx
        c11 = v[x0, y0 + 1, z0 + 1] * (1 - fx) + v[x0 + 1, y0 + 1, z0 + 1] * fx
        c0 = c00 * (1 - fy) + c10 * fy
        c1 = c01 * (1 - fy) + c11 * fy
        return c0 * (1 - fz) + c1 * fz

    def save(self, path) -> None:
        """Text header line, then float32 little-endian samples, x fastest."""
        nx, ny, nz = self.values.shape
        header = "GEOAUG-GRID {} {} {} {}\n".format(
            nx, ny, nz, " ".join(repr(float(x)) for x in (*self.lo, *self.hi))
        )
        payload = np.asarray(self.values.transpose(2, 1, 0), dtype="<f4").tobytes()
        Path(path).write_bytes(header.encode("ascii") + payload)

    @classmethod
    def load(cls, path) -> "GridField":
        raw = Path(path).read_bytes()
        nl = raw.index(b"\n")
        parts = raw[:nl].decode("ascii").split()
        if parts[0] != "GEOAUG-GRID" or len(parts) != 10:
            raise ParameterError(f"{path}: not a grid file")
        nx, ny, nz = (int(x) for x in parts[1:4])
        bounds = [float(x) for x in parts[4:]]
        data = np.frombuffer(raw[nl + 1 :], dtype="<f4")
        if data.size != nx * ny * nz:
            raise ParameterError(f"{path}: expected {nx * ny * nz} samples, found {data.size}")
        values = data.reshape(nz, ny, nx).transpose(2, 1, 0).astype(float)
        return cls(values, bounds[:3], bounds[3:])


class PerturbedField(SdfField):
    """A field plus smooth sinusoidal noise, standing in for a partially
    trained coarse geometry.  No longer an exact SDF, so steps are damped."""

    kind = "perturbed"

    def __init__(self, base: SdfField, amplitude: float, wavelength: float, seed: int = 0, n_waves: int = 4):
        self.base = base
        self.amplitude = float(amplitude)
        self.lo, self.hi = base.lo, base.hi
        rng = np.random.default_rng(seed)
        dirs = unit(rng.normal(size=(n_waves, 3)))
        self._k = dirs * (2 * np.pi / wavelength)
        self._phase = rng.uniform(0, 2 * np.pi, n_waves)
        lip = 1.0 + self.amplitude * 2 * np.pi / wavelength
        self.step_scale = 0.9 * base.step_scale / lip

    def distance(self, p):
        p = np.asarray(p, dtype=float)
        noise = np.sin(p @ self._k.T + self._phase).mean(axis=-1)
        return self.base.distance(p) + self.amplitude * noise


def bbox_interval(lo, hi, origins, dirs):
    """Slab test.  Returns ``(t_near, t_far)``; no intersection when
    ``t_near > t_far``."""
    origins = np.asarray(origins, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        t1 = (lo - origins) * inv
        t2 = (hi - origins) * inv
    # a zero direction component inside the slab gives nan/inf pairs
    tmin = np.where(np.isnan(t1), -np.inf, np.minimum(t1, t2))
    tmax = np.where(np.isnan(t2), np.inf, np.maximum(t1, t2))
    return tmin.max(axis=-1), tmax.min(axis=-1)


def sdf_normals(field: SdfField, p, h: float | None = None) -> np.ndarray:
    """Normalized central-difference gradients at ``(..., 3)`` points."""
    p = np.asarray(p, dtype=float)
    if h is None:
        h = 1e-4 * field.diagonal
    if not h > 0:
        raise ParameterError("finite-difference step must be positive")
    grad = np.empty(p.shape)
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        grad[..., axis] = field.distance(p + e) - field.distance(p - e)
    norm = np.linalg.norm(grad, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise DegenerateNormalError("field gradient vanishes; normal undefined")
    return grad / norm


def sdf_normal(field: SdfField, p, h: float | None = None) -> np.ndarray:
    return sdf_normals(field, np.asarray(p, dtype=float).reshape(3), h)


@dataclass(frozen=True)
class VisibilityResult:
    visible: bool
    steps_taken: int
    exit_point: np.ndarray


def march_visibility(
    field: SdfField,
    starts,
    dirs,
    eps: float | None = None,
    lift: float | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    normals=None,
    max_dist=None,
):
    """Batched visibility march.

    Each ray starts at ``start + lift * offset_dir`` where ``offset_dir`` is
    the surface normal if ``normals`` is given and the ray direction
    otherwise, then steps by the local distance.  A ray is invisible when the
    distance drops below ``eps``; it is visible when it leaves the bounding
    box, travels ``max_dist`` (e.g. reaches a camera) or survives
    ``max_steps`` steps.

    Returns ``(visible, steps, exit_points)``.
    """
    starts = np.asarray(starts, dtype=float).reshape(-1, 3)
    dirs = unit(np.asarray(dirs, dtype=float).reshape(-1, 3))
    n = len(starts)
    if eps is None:
        eps = field.default_eps()
    if lift is None:
        lift = 3.0 * eps
    if not eps > 0:
        raise ParameterError("eps must be positive")
    if lift < 0:
        raise ParameterError("lift must be non-negative")
    if max_steps < 1:
        raise ParameterError("max_steps must be at least 1")
    offset = dirs if normals is None else unit(np.asarray(normals, dtype=float).reshape(-1, 3))
    pos = starts + lift * offset
    travelled = lift * np.sum(offset * dirs, axis=-1)
    limit = np.full(n, np.inf) if max_dist is None else np.broadcast_to(np.asarray(max_dist, float), (n,)).copy()

    visible = np.zeros(n, dtype=bool)
    steps = np.zeros(n, dtype=int)
    active = np.arange(n)
    scale = field.step_scale
    for step in range(max_steps + 1):
        if active.size == 0:
            break
        p = pos[active]
        escaped = ~field.contains(p) | (travelled[active] >= limit[active])
        d = field.distance(p)
        hit = ~escaped & (d < eps)
        visible[active[escaped]] = True
        if step == max_steps:
            survived = ~escaped & ~hit
            visible[active[survived]] = True
            break
        go = ~escaped & ~hit
        active = active[go]
        dd = d[go] * scale
        pos[active] += dirs[active] * dd[:, None]
        travelled[active] += dd
        steps[active] += 1
    return visible, steps, pos


def ray_march_visibility(
    field: SdfField,
    start,
    dir,
    eps: float | None = None,
    lift: float | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    normal=None,
    max_dist: float | None = None,
) -> VisibilityResult:
    vis, steps, pos = march_visibility(
        field,
        start,
        dir,
        eps=eps,
        lift=lift,
        max_steps=max_steps,
        normals=None if normal is None else np.asarray(normal, dtype=float).reshape(1, 3),
        max_dist=max_dist,
    )
    return VisibilityResult(bool(vis[0]), int(steps[0]), pos[0].copy())


def trace_first_hit(
    field: SdfField,
    origins,
    dirs,
    eps: float | None = None,
    max_steps: int = DEFAULT_TRACE_STEPS,
):
    """Batched sphere tracing.  Returns ``(hit, t, points)``; ``t`` is NaN on
    misses.  Rays are clipped to the field's bounding box first; an origin
    already inside solid geometry hits at its entry parameter."""
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    dirs = unit(np.asarray(dirs, dtype=float).reshape(-1, 3))
    n = len(origins)
    if eps is None:
        eps = field.default_eps()
    t_near, t_far = bbox_interval(field.lo, field.hi, origins, dirs)
    t = np.maximum(t_near, 0.0)
    hit = np.zeros(n, dtype=bool)
    active = np.flatnonzero(t <= t_far)
    scale = field.step_scale
    for _ in range(max_steps):
        if active.size == 0:
            break
        d = field.distance(origins[active] + dirs[active] * t[active, None])
        h = d < eps
        hit[active[h]] = True
        rest = active[~h]
        t[rest] += d[~h] * scale
        active = rest[t[rest] <= t_far[rest]]
    t = np.where(hit, t, np.nan)
    points = origins + dirs * np.where(hit, t, 0.0)[:, None]
    return hit, t, points


def sphere_trace_first_hit(field: SdfField, ray, eps: float | None = None, max_steps: int = DEFAULT_TRACE_STEPS):
    """First surface hit along ``ray`` as ``(point, t)``, or ``None`` on a miss."""
    hit, t, pts = trace_first_hit(field, ray.origin, ray.direction, eps, max_steps)
    if not hit[0]:
        return None
    return pts[0], float(t[0])
