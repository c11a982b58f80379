"""Synthetic scenes: SDF geometry, an analytic view-dependent radiance model,
camera trajectories, ground-truth rendering and bundle IO.

A scene description is a JSON object with four sections::

    geometry    {"bounds": [[x,y,z], [x,y,z]], "primitives": [{"kind": ..., "material": ...}, ...]}
    radiance    {"background": rgb, "light_dir": xyz, "ambient": a, "materials": {name: {...}}}
    trajectory  {"kind": "linear_path" | "orbit", "count": n, ...}
    render      {"width": w, "height": h, "fov_deg": f, "composite_samples": n, "sharpness": s}
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import io as gio
from .errors import SceneParseError
from .geom import PinholeCamera, RigidTransform, look_at, pixel_directions, pixel_grid
from .render import DepthMap, ImageBuffer, composite_arrays
from .sdf import (
    Box,
    Capsule,
    Plane,
    SdfField,
    Sphere,
    Union,
    bbox_interval,
    march_visibility,
    sdf_normals,
    trace_first_hit,
)
from .sh import eval_sh_basis, unit

PRESETS = ("sphere_ring", "street", "occluder_pair")
TEST_EVERY = 10
DEFAULT_SHARPNESS = 64.0
DEFAULT_COMPOSITE_SAMPLES = 64
# step budget for ground-truth occlusion tests; grazing rays need many steps
GT_MARCH_STEPS = 4096


# ---------------------------------------------------------------- parsing


def _get(d: dict, key: str, where: str, default: Any = ...):
    if not isinstance(d, dict):
        raise SceneParseError(f"{where}: expected an object")
    if key not in d:
        if default is ...:
            raise SceneParseError(f"{where}.{key}: missing")
        return default
    return d[key]


def _vector(v, where: str, n: int = 3) -> np.ndarray:
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise SceneParseError(f"{where}: expected {n} numbers") from None
    if a.shape != (n,) or not np.all(np.isfinite(a)):
        raise SceneParseError(f"{where}: expected {n} finite numbers")
    return a


def _number(v, where: str, positive: bool = False, integer: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SceneParseError(f"{where}: expected a number")
    if integer and int(v) != v:
        raise SceneParseError(f"{where}: expected an integer")
    if positive and v <= 0:
        raise SceneParseError(f"{where}: must be positive")
    return int(v) if integer else float(v)


def _primitive(spec: dict, where: str) -> SdfField:
    kind = _get(spec, "kind", where)
    try:
        if kind == "sphere":
            return Sphere(_vector(_get(spec, "center", where), f"{where}.center"),
                          _number(_get(spec, "radius", where), f"{where}.radius", positive=True))
        if kind == "box":
            return Box(_vector(_get(spec, "center", where), f"{where}.center"),
                       _vector(_get(spec, "half_extents", where), f"{where}.half_extents"))
        if kind == "plane":
            return Plane(_vector(_get(spec, "normal", where), f"{where}.normal"),
                         _number(_get(spec, "offset", where, 0.0), f"{where}.offset"))
        if kind == "capsule":
            return Capsule(_vector(_get(spec, "a", where), f"{where}.a"),
                           _vector(_get(spec, "b", where), f"{where}.b"),
                           _number(_get(spec, "radius", where), f"{where}.radius", positive=True))
    except SceneParseError:
        raise
    except ValueError as e:
        raise SceneParseError(f"{where}: {e}") from None
    raise SceneParseError(f"{where}.kind: unknown primitive kind {kind!r}")


@dataclass(frozen=True)
class Material:
    albedo: np.ndarray
    view_coeffs: np.ndarray  # (9, 3) real SH, band 0 unused
    texture_amplitude: float = 0.0
    texture_wavelength: float = 1.0
    specular_strength: float = 0.0
    shininess: float = 16.0


def _material(spec: dict, where: str) -> Material:
    albedo = _vector(_get(spec, "albedo", where), f"{where}.albedo")
    coeffs = np.zeros((9, 3))
    view = _get(spec, "view_sh", where, None)
    if view is not None:
        v = np.array(view, dtype=float)
        if v.shape != (8, 3):
            raise SceneParseError(f"{where}.view_sh: expected 8 RGB triples (bands 1 and 2)")
        coeffs[1:] = v
    tex = _get(spec, "texture", where, {})
    spec_lobe = _get(spec, "specular", where, {})
    return Material(
        albedo=albedo,
        view_coeffs=coeffs,
        texture_amplitude=_number(_get(tex, "amplitude", f"{where}.texture", 0.0), f"{where}.texture.amplitude"),
        texture_wavelength=_number(_get(tex, "wavelength", f"{where}.texture", 1.0), f"{where}.texture.wavelength", positive=True),
        specular_strength=_number(_get(spec_lobe, "strength", f"{where}.specular", 0.0), f"{where}.specular.strength"),
        shininess=_number(_get(spec_lobe, "shininess", f"{where}.specular", 16.0), f"{where}.specular.shininess", positive=True),
    )


class RadianceModel:
    """Per-point view-dependent color.

    ``albedo * texture(p) * (ambient + (1 - ambient) * max(0, n.l))`` plus a
    band-1/2 SH term in the view direction plus an optional Phong lobe.
    Without the lobe every point's radiance map is band-limited to l <= 2.
    """

    def __init__(self, materials: list[Material], light_dir, ambient: float, background):
        self.materials = materials
        self.light_dir = unit(light_dir)
        self.ambient = float(ambient)
        self.background = np.asarray(background, dtype=float)

    @property
    def band_limited(self) -> bool:
        return all(m.specular_strength == 0 for m in self.materials)

    def diffuse(self, points, material_ids, normals) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (3,))
        shade = self.ambient + (1 - self.ambient) * np.maximum(normals @ self.light_dir, 0.0)
        for i, m in enumerate(self.materials):
            sel = material_ids == i
            if not np.any(sel):
                continue
            p = points[sel]
            k = 2 * np.pi / m.texture_wavelength
            tex = 1.0 + m.texture_amplitude * 0.5 * (np.sin(k * p[:, 0]) * np.sin(k * p[:, 1]) + np.sin(k * p[:, 2]))
            out[sel] = m.albedo * (tex * shade[sel])[:, None]
        return out

    def view_term(self, view_dirs, material_ids, normals) -> np.ndarray:
        view_dirs = np.asarray(view_dirs, dtype=float)
        basis = eval_sh_basis(2, view_dirs)
        out = np.zeros(view_dirs.shape[:-1] + (3,))
        for i, m in enumerate(self.materials):
            sel = material_ids == i
            if not np.any(sel):
                continue
            out[sel] = basis[sel] @ m.view_coeffs
            if m.specular_strength > 0:
                n = normals[sel]
                refl = 2 * (n @ self.light_dir)[:, None] * n - self.light_dir
                lobe = np.maximum(np.sum(refl * view_dirs[sel], axis=-1), 0.0) ** m.shininess
                out[sel] += m.specular_strength * lobe[:, None]
        return out

    def __call__(self, points, view_dirs, material_ids, normals) -> np.ndarray:
        c = self.diffuse(points, material_ids, normals) + self.view_term(view_dirs, material_ids, normals)
        return np.clip(c, 0.0, 1.0)


@dataclass(frozen=True)
class RenderSettings:
    width: int
    height: int
    fov_deg: float
    composite_samples: int = DEFAULT_COMPOSITE_SAMPLES
    sharpness: float = DEFAULT_SHARPNESS

    def intrinsics(self) -> tuple[float, float, float, float]:
        f = 0.5 * self.width / math.tan(math.radians(self.fov_deg) / 2)
        return f, f, (self.width - 1) / 2, (self.height - 1) / 2


@dataclass(frozen=True)
class TrajectorySpec:
    kind: str
    count: int
    params: dict
    sparsity: int = 1


def _trajectory(spec: dict) -> TrajectorySpec:
    where = "trajectory"
    kind = _get(spec, "kind", where)
    if kind not in ("linear_path", "orbit"):
        raise SceneParseError(f"{where}.kind: expected 'linear_path' or 'orbit', got {kind!r}")
    count = _number(_get(spec, "count", where), f"{where}.count", integer=True)
    if count < 2:
        raise SceneParseError(f"{where}.count: need at least 2 cameras")
    sparsity = _number(_get(spec, "sparsity", where, 1), f"{where}.sparsity", integer=True)
    if sparsity < 1:
        raise SceneParseError(f"{where}.sparsity: must be >= 1")
    if kind == "linear_path":
        params = {
            "start": _vector(_get(spec, "start", where), f"{where}.start"),
            "end": _vector(_get(spec, "end", where), f"{where}.end"),
            "look_jitter_deg": _number(_get(spec, "look_jitter_deg", where, 0.0), f"{where}.look_jitter_deg"),
            "position_jitter": _vector(_get(spec, "position_jitter", where, [0.0, 0.0]), f"{where}.position_jitter", 2),
            "seed": _number(_get(spec, "seed", where, 0), f"{where}.seed", integer=True),
        }
    else:
        params = {
            "center": _vector(_get(spec, "center", where), f"{where}.center"),
            "radius": _number(_get(spec, "radius", where), f"{where}.radius", positive=True),
            "elevation_deg": _number(_get(spec, "elevation_deg", where, 0.0), f"{where}.elevation_deg"),
        }
    return TrajectorySpec(kind, count, params, sparsity)


def trajectory_poses(traj: TrajectorySpec) -> list[RigidTransform]:
    p = traj.params
    poses = []
    if traj.kind == "orbit":
        el = math.radians(p["elevation_deg"])
        for i in range(traj.count):
            az = 2 * math.pi * i / traj.count
            eye = p["center"] + p["radius"] * np.array(
                [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
            )
            poses.append(look_at(eye, p["center"]))
        return poses
    rng = np.random.default_rng(p["seed"])
    fwd = unit(p["end"] - p["start"])
    lateral = unit(np.cross(np.array([0.0, 0.0, 1.0]), fwd))
    for i in range(traj.count):
        s = i / (traj.count - 1)
        jl, jv = rng.uniform(-1, 1, 2) * p["position_jitter"]
        eye = p["start"] + s * (p["end"] - p["start"]) + jl * lateral + jv * np.array([0.0, 0.0, 1.0])
        yaw, pitch = np.radians(rng.uniform(-1, 1, 2) * p["look_jitter_deg"])
        look = math.cos(yaw) * fwd + math.sin(yaw) * lateral
        look = unit(math.cos(pitch) * look + math.sin(pitch) * np.array([0.0, 0.0, 1.0]))
        poses.append(look_at(eye, eye + look))
    return poses


# ---------------------------------------------------------------- scene


class Scene:
    """Geometry, radiance model and render settings (no cameras)."""

    def __init__(self, description: dict):
        if not isinstance(description, dict):
            raise SceneParseError("scene: expected a JSON object")
        self.description = description
        if "geometry" not in description:
            raise SceneParseError("geometry: missing section")
        geo = description["geometry"]
        prims = _get(geo, "primitives", "geometry")
        if not isinstance(prims, list) or not prims:
            raise SceneParseError("geometry.primitives: at least one primitive is required")
        for section in ("radiance", "trajectory", "render"):
            if section not in description:
                raise SceneParseError(f"{section}: missing section")
        rad = description["radiance"]
        mat_specs = _get(rad, "materials", "radiance")
        if not isinstance(mat_specs, dict) or not mat_specs:
            raise SceneParseError("radiance.materials: at least one material is required")
        names = sorted(mat_specs)
        materials = [_material(mat_specs[n], f"radiance.materials.{n}") for n in names]

        members, mat_ids = [], []
        for i, ps in enumerate(prims):
            where = f"geometry.primitives[{i}]"
            members.append(_primitive(ps, where))
            mname = _get(ps, "material", where)
            if mname not in mat_specs:
                raise SceneParseError(f"{where}.material: unknown material {mname!r}")
            mat_ids.append(names.index(mname))
        bounds = _get(geo, "bounds", "geometry", None)
        if bounds is not None:
            if not isinstance(bounds, list) or len(bounds) != 2:
                raise SceneParseError("geometry.bounds: expected [[lo], [hi]]")
            bounds = (_vector(bounds[0], "geometry.bounds[0]"), _vector(bounds[1], "geometry.bounds[1]"))
            if np.any(bounds[1] <= bounds[0]):
                raise SceneParseError("geometry.bounds: hi must exceed lo on every axis")
        try:
            self.field = Union(members, bounds)
        except ValueError as e:
            raise SceneParseError(f"geometry.bounds: {e}") from None
        self.member_materials = np.array(mat_ids)
        self.radiance = RadianceModel(
            materials,
            _vector(_get(rad, "light_dir", "radiance", [0.3, 0.2, 1.0]), "radiance.light_dir"),
            _number(_get(rad, "ambient", "radiance", 0.4), "radiance.ambient"),
            _vector(_get(rad, "background", "radiance", [0.6, 0.75, 0.9]), "radiance.background"),
        )
        self.trajectory = _trajectory(description["trajectory"])
        r = description["render"]
        self.render = RenderSettings(
            width=_number(_get(r, "width", "render"), "render.width", positive=True, integer=True),
            height=_number(_get(r, "height", "render"), "render.height", positive=True, integer=True),
            fov_deg=_number(_get(r, "fov_deg", "render", 90.0), "render.fov_deg", positive=True),
            composite_samples=_number(_get(r, "composite_samples", "render", DEFAULT_COMPOSITE_SAMPLES),
                                      "render.composite_samples", positive=True, integer=True),
            sharpness=_number(_get(r, "sharpness", "render", DEFAULT_SHARPNESS), "render.sharpness", positive=True),
        )
        self.eps = self.field.default_eps()

    def cameras(self) -> list[PinholeCamera]:
        fx, fy, cx, cy = self.render.intrinsics()
        return [PinholeCamera(fx, fy, cx, cy, self.render.width, self.render.height, pose)
                for pose in trajectory_poses(self.trajectory)]

    def materials_at(self, points) -> np.ndarray:
        return self.member_materials[self.field.nearest_member(points)]

    def radiance_at(self, points, view_dirs) -> np.ndarray:
        """Radiance leaving surface points toward ``view_dirs`` (surface to viewer)."""
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(points) == 0:
            return np.zeros((0, 3))
        normals = sdf_normals(self.field, points)
        return self.radiance(points, unit(view_dirs).reshape(-1, 3), self.materials_at(points), normals)

    def ray_radiance(self, origins, dirs, normals=None, max_steps: int = GT_MARCH_STEPS) -> np.ndarray:
        """True color carried by rays leaving ``origins`` along ``dirs``.

        A ray that escapes the scene carries the radiance of the surface at
        its origin (the origin is projected onto the zero level set first).
        A ray that is blocked carries the color of the occluder as seen by a
        viewer where the line exits the bounding box.  ``normals`` lifts the
        occlusion march off the surface; it defaults to the field gradient.
        """
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        dirs = unit(np.asarray(dirs, dtype=float).reshape(-1, 3))
        out = np.tile(self.radiance.background, (len(origins), 1))
        if len(origins) == 0:
            return out
        f = self.field.distance(origins)
        grad = sdf_normals(self.field, origins)
        if normals is None:
            normals = grad
        near = np.abs(f) < 4 * self.eps
        surf = origins - f[:, None] * grad
        free, _, _ = march_visibility(self.field, surf, dirs, self.eps, normals=normals, max_steps=max_steps)
        free &= near
        if np.any(free):
            out[free] = self.radiance_at(surf[free], dirs[free])
        blocked = np.flatnonzero(~free)
        if blocked.size:
            o, d = origins[blocked], dirs[blocked]
            _, t_far = bbox_interval(self.field.lo, self.field.hi, o, d)
            viewers = o + d * np.maximum(t_far, 0.0)[:, None]
            hit, _, pts = trace_first_hit(self.field, viewers, -d, self.eps, max_steps)
            if np.any(hit):
                out[blocked[hit]] = self.radiance_at(pts[hit], d[hit])
        return out

    def render_trace(self, cam: PinholeCamera) -> tuple[ImageBuffer, DepthMap]:
        """Sphere-trace every pixel; shade the first hit."""
        pix = pixel_grid(cam.width, cam.height).reshape(-1, 2)
        dirs = pixel_directions(cam, pix)
        origins = np.broadcast_to(cam.center, dirs.shape)
        hit, t, pts = trace_first_hit(self.field, origins, dirs, self.eps)
        colors = np.tile(self.radiance.background, (len(dirs), 1))
        if np.any(hit):
            colors[hit] = self.radiance_at(pts[hit], -dirs[hit])
        forward = cam.world_from_camera.rotation[:, 2]
        depth = np.where(hit, t * (dirs @ forward), np.nan)
        shape = (cam.height, cam.width)
        return ImageBuffer(colors.reshape(shape + (3,))), DepthMap(depth.reshape(shape))

    def render_composite(self, cam: PinholeCamera) -> ImageBuffer:
        """Volume-render every pixel from SDF-derived opacities.

        Samples are spread uniformly over the ray's span inside the bounding
        box.  Each interval's opacity is the logistic-CDF drop of the SDF
        across it; its color is the radiance at the interval's zero crossing
        (or midpoint when the SDF does not change sign).
        """
        n = self.render.composite_samples
        s = self.render.sharpness
        pix = pixel_grid(cam.width, cam.height).reshape(-1, 2)
        dirs = pixel_directions(cam, pix)
        origins = np.broadcast_to(cam.center, dirs.shape)
        t_near, t_far = bbox_interval(self.field.lo, self.field.hi, origins, dirs)
        t0 = np.maximum(t_near, 0.0)
        inside = t0 < t_far
        colors = np.tile(self.radiance.background, (len(dirs), 1))
        idx = np.flatnonzero(inside)
        if idx.size:
            frac = np.linspace(0.0, 1.0, n + 1)
            t = t0[idx, None] + (t_far[idx] - t0[idx])[:, None] * frac
            pts = origins[idx, None, :] + dirs[idx, None, :] * t[..., None]
            f = self.field.distance(pts)
            cdf = 1.0 / (1.0 + np.exp(-s * f))
            with np.errstate(divide="ignore", invalid="ignore"):
                alpha = np.where(cdf[:, :-1] > 0, (cdf[:, :-1] - cdf[:, 1:]) / cdf[:, :-1], 0.0)
            alpha = np.clip(alpha, 0.0, 1.0)
            crossing = (f[:, :-1] > 0) & (f[:, 1:] <= 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.where(crossing, f[:, :-1] / (f[:, :-1] - f[:, 1:]), 0.5)
            ts = t[:, :-1] + w * (t[:, 1:] - t[:, :-1])
            mid_t = 0.5 * (t[:, :-1] + t[:, 1:])

            trans = np.concatenate([np.ones((len(idx), 1)), np.cumprod(1 - alpha, axis=1)[:, :-1]], axis=1)
            weight = trans * alpha
            sec_colors = np.zeros(alpha.shape + (3,))
            need = weight > 1e-8
            if np.any(need):
                rows, cols = np.nonzero(need)
                p = origins[idx[rows]] + dirs[idx[rows]] * ts[rows, cols][:, None]
                sec_colors[rows, cols] = self.radiance_at(p, -dirs[idx[rows]])
            rgb, _ = composite_arrays(mid_t, alpha, sec_colors)
            residual = np.prod(1 - alpha, axis=1)
            colors[idx] = rgb + residual[:, None] * self.radiance.background
        return ImageBuffer(colors.reshape(cam.height, cam.width, 3))


# ---------------------------------------------------------------- bundles


def thin_trajectory(cameras: list, k: int) -> list[int]:
    """Indices of the cameras kept when retaining every k-th frame."""
    if k < 1:
        raise ValueError("thinning factor must be >= 1")
    return list(range(0, len(cameras), k))


def split_indices(n: int) -> tuple[list[int], list[int]]:
    """``(train, test)``: every tenth frame is held out."""
    test = [i for i in range(n) if i % TEST_EVERY == 0]
    train = [i for i in range(n) if i % TEST_EVERY != 0]
    return train, test


@dataclass
class SceneBundle:
    scene: Scene
    cameras: list[PinholeCamera]
    images: list[ImageBuffer]
    depths: list[DepthMap]
    train: list[int]
    test: list[int]
    name: str = "scene"

    @property
    def field(self) -> SdfField:
        return self.scene.field

    def train_subset(self, sparsity: int = 1) -> list[int]:
        """Training cameras after keeping every ``sparsity``-th one."""
        return [self.train[i] for i in thin_trajectory(self.train, sparsity)]


def load_description(source) -> dict:
    """Parse a scene file, or a preset given by name or ``presets/<name>.json``."""
    if isinstance(source, dict):
        return source
    path = Path(source)
    if not path.exists():
        stem = path.stem if path.suffix == ".json" else path.name
        if stem in PRESETS:
            text = resources.files("geoaug").joinpath("presets").joinpath(f"{stem}.json").read_text()
            return _parse_json(text, f"presets/{stem}.json")
        raise SceneParseError(f"{source}: no such scene file or preset")
    return _parse_json(path.read_text(), str(path))


def _parse_json(text: str, name: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneParseError(f"{name}:{e.lineno}:{e.colno}: {e.msg}") from None


def render_ground_truth(scene: Scene, cameras: list[PinholeCamera], workers: int = 1):
    """Trace-path image and depth for every camera."""
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            out = list(pool.map(scene.render_trace, cameras))
    else:
        out = [scene.render_trace(c) for c in cameras]
    return [o[0] for o in out], [o[1] for o in out]


def build_scene(source, workers: int = 1) -> SceneBundle:
    desc = load_description(source)
    scene = Scene(desc)
    cams = scene.cameras()
    images, depths = render_ground_truth(scene, cams, workers)
    train, test = split_indices(len(cams))
    return SceneBundle(scene, cams, images, depths, train, test, name=str(desc.get("name", "scene")))


def save_bundle(bundle: SceneBundle, out_dir) -> Path:
    """Write the bundle and a manifest of SHA-256 hashes.  Returns the manifest path."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "depths").mkdir(parents=True, exist_ok=True)
    (out / "scene.json").write_text(json.dumps(bundle.scene.description, indent=2, sort_keys=True) + "\n")
    (out / "cameras.txt").write_text("".join(c.to_record() + "\n" for c in bundle.cameras))
    (out / "split.txt").write_text(
        "train " + " ".join(map(str, bundle.train)) + "\ntest " + " ".join(map(str, bundle.test)) + "\n"
    )
    for i, (img, dep) in enumerate(zip(bundle.images, bundle.depths)):
        gio.write_ppm(out / "images" / f"{i:03d}.ppm", img)
        gio.write_rgbf(out / "images" / f"{i:03d}.rgbf", img)
        gio.write_depth(out / "depths" / f"{i:03d}.depth", dep)
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.txt")
    manifest = out / "manifest.txt"
    manifest.write_text("".join(f"{gio.sha256_file(p)}  {p.relative_to(out).as_posix()}\n" for p in files))
    return manifest


def load_bundle(bundle_dir) -> SceneBundle:
    d = Path(bundle_dir)
    if not (d / "scene.json").exists():
        raise SceneParseError(f"{d}: not a scene bundle (scene.json missing)")
    desc = _parse_json((d / "scene.json").read_text(), str(d / "scene.json"))
    scene = Scene(desc)
    cams = [PinholeCamera.from_record(ln) for ln in (d / "cameras.txt").read_text().splitlines() if ln.strip()]
    split = dict(ln.split(maxsplit=1) if " " in ln else (ln, "") for ln in (d / "split.txt").read_text().splitlines())
    train = [int(x) for x in split.get("train", "").split()]
    test = [int(x) for x in split.get("test", "").split()]
    images = [gio.read_rgbf(d / "images" / f"{i:03d}.rgbf") for i in range(len(cams))]
    depths = [gio.read_depth(d / "depths" / f"{i:03d}.depth") for i in range(len(cams))]
    return SceneBundle(scene, cams, images, depths, train, test, name=str(desc.get("name", "scene")))
