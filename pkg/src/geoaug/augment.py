"""Ray augmentation: cast rays from coarse-surface vertices, drop the ones
that hit geometry, and label the survivors from the vertex's observed
radiance (SH fit, geodesic interpolation or a single observed view)."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import InsufficientSamplesError, ParameterError
from .geom import PinholeCamera, Ray, project
from .mesh import TriangleMesh, lattice, marching_cubes, surface_points
from .render import ImageBuffer
from .sdf import PerturbedField, SdfField, march_visibility, sdf_normal
from .sh import (
    MAX_L_MAX,
    PENALTIES,
    RadianceSampleSet,
    eval_sh_batch,
    fit_sh_adaptive,
    interpolate_batch,
    unit,
)
from .warp import WarpResult, merge_warps, warp_depth

SH_QUERIED = "sh_queried"
SINGLE_VIEW = "single_view_assigned"
INTERPOLATED = "interpolated"
LABEL_KINDS = (SH_QUERIED, SINGLE_VIEW, INTERPOLATED)
CASTING_MODES = ("surface_guided", "random")

# independent RNG streams per vertex
_STREAM_CAST, _STREAM_PICK, _STREAM_ORIGIN = 0, 1, 2


@dataclass(frozen=True)
class AugmentConfig:
    rays_per_vertex: int = 16
    n_v_threshold: int = 10
    l_max: int = 2
    ridge: float = 1e-4
    # ridge weights l(l+1) per coefficient, leaving the mean color unpenalized
    sh_penalty: str = "laplacian"
    # per-vertex band cap: mean leverage at the ray directions (inf disables)
    max_leverage: float = 10.0
    seed: int = 42
    use_sh: bool = True
    use_visibility_check: bool = True
    casting: str = "surface_guided"
    use_depth_warp: bool = True
    resolution: int = 64
    max_vertices: int = 10000
    # coarse-geometry perturbation amplitude, as a fraction of the voxel size
    coarse_noise: float = 0.0
    # training views warped into each held-out camera
    warp_neighbors: int = 2

    def __post_init__(self):
        if self.rays_per_vertex < 1:
            raise ParameterError("rays_per_vertex must be >= 1")
        if self.n_v_threshold < 1:
            raise ParameterError("n_v_threshold must be >= 1")
        if not 0 <= self.l_max <= MAX_L_MAX:
            raise ParameterError(f"l_max must lie in [0, {MAX_L_MAX}]")
        if self.ridge < 0:
            raise ParameterError("ridge must be non-negative")
        if not self.max_leverage > 0:
            raise ParameterError("max_leverage must be positive")
        if self.sh_penalty not in PENALTIES:
            raise ParameterError(f"sh_penalty must be one of {PENALTIES}")
        if self.casting not in CASTING_MODES:
            raise ParameterError(f"casting must be one of {CASTING_MODES}")
        if self.resolution < 8:
            raise ParameterError("resolution must be >= 8")
        if self.max_vertices < 1:
            raise ParameterError("max_vertices must be >= 1")
        if self.coarse_noise < 0:
            raise ParameterError("coarse_noise must be non-negative")
        if self.warp_neighbors < 1:
            raise ParameterError("warp_neighbors must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AugmentedRay:
    ray: Ray
    pseudo_color: np.ndarray
    source_vertex: int
    label_kind: str


@dataclass
class AugmentedRays:
    """Columnar store of augmented rays; iterates as :class:`AugmentedRay`."""

    origins: np.ndarray
    directions: np.ndarray
    colors: np.ndarray
    source_vertex: np.ndarray
    label_kind: np.ndarray  # indices into LABEL_KINDS

    @classmethod
    def empty(cls) -> "AugmentedRays":
        z = np.zeros((0, 3))
        return cls(z, z.copy(), z.copy(), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.origins)

    def __getitem__(self, i: int) -> AugmentedRay:
        return AugmentedRay(
            Ray(self.origins[i], self.directions[i]),
            self.colors[i].copy(),
            int(self.source_vertex[i]),
            LABEL_KINDS[self.label_kind[i]],
        )

    def __iter__(self) -> Iterator[AugmentedRay]:
        return (self[i] for i in range(len(self)))

    def kinds(self) -> list[str]:
        return [LABEL_KINDS[k] for k in self.label_kind]

    def to_text(self) -> str:
        rows = []
        for o, d, c, k, v in zip(
            self.origins.tolist(), self.directions.tolist(), self.colors.tolist(),
            self.label_kind.tolist(), self.source_vertex.tolist(),
        ):
            rows.append(" ".join(repr(x) for x in (*o, *d, *c)) + f" {LABEL_KINDS[k]} {v}\n")
        return "".join(rows)

    @classmethod
    def from_text(cls, text: str) -> "AugmentedRays":
        lines = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not lines:
            return cls.empty()
        if any(len(p) != 11 for p in lines):
            raise ParameterError("augmented-ray records need 11 fields")
        num = np.array([[float(x) for x in p[:9]] for p in lines])
        try:
            kinds = np.array([LABEL_KINDS.index(p[9]) for p in lines])
        except ValueError as e:
            raise ParameterError(f"unknown label kind: {e}") from None
        return cls(num[:, 0:3], num[:, 3:6], num[:, 6:9], np.array([int(p[10]) for p in lines]), kinds)


@dataclass
class AugmentReport:
    vertices_processed: int = 0
    vertices_skipped: int = 0
    rays_cast: int = 0
    rays_rejected: int = 0
    rays_emitted: int = 0
    sh_vertices: int = 0
    fallback_vertices: int = 0
    interpolated_vertices: int = 0
    mesh_vertices: int = 0
    training_views: int = 0
    wall_time: float = 0.0
    depth_maps: dict = field(default_factory=dict, repr=False)

    def consistent(self) -> bool:
        return self.rays_rejected + self.rays_emitted == self.rays_cast

    def counts(self) -> dict:
        keys = ("vertices_processed", "vertices_skipped", "rays_cast", "rays_rejected", "rays_emitted",
                "sh_vertices", "fallback_vertices", "interpolated_vertices", "mesh_vertices", "training_views")
        return {k: getattr(self, k) for k in keys}

    def to_text(self) -> str:
        lines = [f"{k} {v}" for k, v in self.counts().items()]
        lines.append(f"wall_time_s {self.wall_time:.3f}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- casting


def hemisphere_directions(normal, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform directions with strictly positive dot against ``normal``."""
    n = unit(normal)
    out = np.empty((count, 3))
    filled = 0
    while filled < count:
        v = rng.standard_normal((count - filled, 3))
        norm = np.linalg.norm(v, axis=1)
        v = v[norm > 0] / norm[norm > 0, None]
        dot = v @ n
        v = np.where((dot < 0)[:, None], -v, v)[dot != 0]
        out[filled : filled + len(v)] = v
        filled += len(v)
    return out


def sphere_directions(count: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((count, 3))
    norm = np.linalg.norm(v, axis=1)
    while np.any(norm == 0):
        bad = norm == 0
        v[bad] = rng.standard_normal((int(bad.sum()), 3))
        norm = np.linalg.norm(v, axis=1)
    return v / norm[:, None]


def _rng(seed: int, vertex: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, vertex, stream])


def cast_surface_rays(position, normal, count: int, seed: int, vertex_index: int = 0) -> list[Ray]:
    """Uniform open-hemisphere rays from ``position`` around ``normal``."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    dirs = hemisphere_directions(normal, count, _rng(seed, vertex_index, _STREAM_CAST))
    return [Ray(np.asarray(position, dtype=float), d) for d in dirs]


def _cast_batch(vertex_ids, positions, normals, config: AugmentConfig, lo, hi):
    """Origins and directions ``(V, R, 3)`` for every vertex."""
    r = config.rays_per_vertex
    origins = np.empty((len(vertex_ids), r, 3))
    dirs = np.empty((len(vertex_ids), r, 3))
    for i, vid in enumerate(vertex_ids.tolist()):
        if config.casting == "surface_guided":
            origins[i] = positions[i]
            dirs[i] = hemisphere_directions(normals[i], r, _rng(config.seed, vid, _STREAM_CAST))
        else:
            origins[i] = lo + (hi - lo) * _rng(config.seed, vid, _STREAM_ORIGIN).random((r, 3))
            dirs[i] = sphere_directions(r, _rng(config.seed, vid, _STREAM_CAST))
    return origins, dirs


# ---------------------------------------------------------------- observations


def bilinear(pixels: np.ndarray, pix: np.ndarray) -> np.ndarray:
    """Sample ``(H, W, C)`` at continuous pixel positions inside the center extent."""
    h, w = pixels.shape[:2]
    x = np.clip(pix[:, 0], 0, w - 1)
    y = np.clip(pix[:, 1], 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.int64), max(w - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.int64), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]
    top = pixels[y0, x0] * (1 - fx) + pixels[y0, x1] * fx
    bot = pixels[y1, x0] * (1 - fx) + pixels[y1, x1] * fx
    return top * (1 - fy) + bot * fy


@dataclass
class Observations:
    """Per-vertex samples, padded to one slot per camera."""

    mask: np.ndarray  # (P, C)
    directions: np.ndarray  # (P, C, 3)
    colors: np.ndarray  # (P, C, 3)

    @property
    def counts(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    def sample_set(self, i: int) -> RadianceSampleSet:
        m = self.mask[i]
        return RadianceSampleSet(self.colors[i, m], self.directions[i, m])


def gather_batch(
    field: SdfField,
    positions: np.ndarray,
    normals: np.ndarray | None,
    cameras: Sequence[PinholeCamera],
    images: Sequence[ImageBuffer],
    visibility: bool = True,
    eps: float | None = None,
) -> Observations:
    """Project every vertex into every camera and keep the unoccluded views."""
    if len(cameras) != len(images):
        raise ParameterError("cameras and images must align one to one")
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    p, c = len(positions), len(cameras)
    mask = np.zeros((p, c), dtype=bool)
    dirs = np.zeros((p, c, 3))
    colors = np.zeros((p, c, 3))
    for j, (cam, img) in enumerate(zip(cameras, images)):
        pix, _, front = project(cam, positions)
        idx = np.flatnonzero(front & cam.in_bounds(pix))
        if idx.size == 0:
            continue
        to_cam = cam.center - positions[idx]
        dist = np.linalg.norm(to_cam, axis=1)
        keep = dist > 0
        idx, to_cam, dist = idx[keep], to_cam[keep], dist[keep]
        d = to_cam / dist[:, None]
        if visibility and idx.size:
            vis, _, _ = march_visibility(
                field, positions[idx], d, eps=eps,
                normals=None if normals is None else normals[idx], max_dist=dist,
            )
            idx, d = idx[vis], d[vis]
        mask[idx, j] = True
        dirs[idx, j] = d
        colors[idx, j] = bilinear(img.pixels, pix[idx])
    return Observations(mask, dirs, colors)


def gather_observations(
    vertex,
    cameras: Sequence[PinholeCamera],
    images: Sequence[ImageBuffer],
    field: SdfField,
    normal=None,
    visibility: bool = True,
) -> RadianceSampleSet:
    """Radiance samples of one vertex from every camera that sees it.

    The visibility march is lifted off the surface along ``normal`` (taken
    from the field gradient when omitted) and stops at the camera center.
    """
    vertex = np.asarray(vertex, dtype=float).reshape(1, 3)
    n = sdf_normal(field, vertex[0]) if normal is None else unit(normal)
    obs = gather_batch(field, vertex, n.reshape(1, 3), cameras, images, visibility)
    return obs.sample_set(0)


# ---------------------------------------------------------------- labeling


def _fallback_colors(colors, mask, seed: int, vertex: int, count: int) -> np.ndarray:
    avail = np.flatnonzero(mask)
    pick = avail[_rng(seed, vertex, _STREAM_PICK).integers(len(avail))]
    return np.tile(colors[pick], (count, 1))


def label_rays(
    rays: Sequence[Ray],
    observations: RadianceSampleSet,
    config: AugmentConfig,
    vertex_index: int = 0,
) -> list[AugmentedRay]:
    """Pseudo-label rays that share one origin vertex."""
    if len(observations) == 0:
        raise InsufficientSamplesError("vertex has no observations; skip it")
    dirs = np.array([r.direction for r in rays]).reshape(-1, 3)
    k = len(observations)
    mask = np.ones((1, k), dtype=bool)
    colors, kind = _label_group(
        dirs[None], observations.directions[None], observations.colors[None], mask,
        np.array([vertex_index]), config,
    )
    return [AugmentedRay(r, colors[0, i], vertex_index, LABEL_KINDS[kind[0]]) for i, r in enumerate(rays)]


def _label_group(targets, obs_dirs, obs_colors, mask, vertex_ids, config: AugmentConfig):
    """Labels ``(V, R, 3)`` and a label-kind index per vertex."""
    counts = mask.sum(axis=1)
    out = np.empty(targets.shape[:2] + (3,))
    kind = np.full(len(targets), LABEL_KINDS.index(SINGLE_VIEW))
    if config.use_sh:
        sel = counts >= config.n_v_threshold
        if np.any(sel):
            coeffs, _ = fit_sh_adaptive(
                obs_dirs[sel], obs_colors[sel], targets[sel], config.l_max, config.ridge, mask[sel],
                config.sh_penalty, config.max_leverage,
            )
            out[sel] = np.clip(eval_sh_batch(coeffs, config.l_max, targets[sel]), 0.0, 1.0)
            kind[sel] = LABEL_KINDS.index(SH_QUERIED)
    else:
        sel = counts >= 2
        if np.any(sel):
            out[sel] = interpolate_batch(targets[sel], obs_dirs[sel], obs_colors[sel], mask[sel])
            kind[sel] = LABEL_KINDS.index(INTERPOLATED)
    for i in np.flatnonzero(~sel):
        out[i] = _fallback_colors(obs_colors[i], mask[i], config.seed, int(vertex_ids[i]), targets.shape[1])
    return out, kind


# ---------------------------------------------------------------- pipeline


@dataclass
class PreparedScene:
    """Geometry and observations shared by runs that differ only in labeling
    or casting.  Built once per (camera subset, geometry settings)."""

    mesh: TriangleMesh
    field: SdfField
    vertex_ids: np.ndarray
    positions: np.ndarray
    normals: np.ndarray
    camera_indices: list[int]
    observations: dict = field(default_factory=dict)

    def observations_for(self, bundle, visibility: bool) -> Observations:
        if visibility not in self.observations:
            cams = [bundle.cameras[i] for i in self.camera_indices]
            imgs = [bundle.images[i] for i in self.camera_indices]
            self.observations[visibility] = gather_batch(
                self.field, self.positions, self.normals, cams, imgs, visibility
            )
        return self.observations[visibility]


def coarse_field(field: SdfField, config: AugmentConfig) -> SdfField:
    if config.coarse_noise == 0:
        return field
    _, spacing = lattice(field, config.resolution)
    amp = config.coarse_noise * float(spacing.max())
    wavelength = 8.0 * float(spacing.max())
    return PerturbedField(field, amp, wavelength, seed=config.seed)


def prepare_scene(bundle, config: AugmentConfig, sparsity: int = 1) -> PreparedScene:
    geom = coarse_field(bundle.field, config)
    mesh = marching_cubes(geom, config.resolution)
    if mesh.empty:
        ids = np.zeros(0, dtype=np.int64)
        pos = nrm = np.zeros((0, 3))
    else:
        ids, pos, nrm = surface_points(mesh, config.max_vertices, config.seed)
    return PreparedScene(mesh, geom, ids, pos, nrm, bundle.train_subset(sparsity))


def warp_test_depths(bundle, train_indices: Sequence[int], neighbors: int = 2) -> dict[int, WarpResult]:
    """Pseudo-depth for every held-out camera from its nearest training views."""
    out = {}
    if not train_indices:
        return out
    centers = np.array([bundle.cameras[i].center for i in train_indices])
    for t in bundle.test:
        cam = bundle.cameras[t]
        dist = np.linalg.norm(centers - cam.center, axis=1)
        near = np.argsort(dist, kind="stable")[:neighbors]
        out[t] = merge_warps([warp_depth(bundle.depths[train_indices[k]], bundle.cameras[train_indices[k]], cam)
                              for k in near])
    return out


def run_augmentation(bundle, config: AugmentConfig, sparsity: int = 1, prepared: PreparedScene | None = None):
    """Full pipeline on a scene bundle.  Returns ``(AugmentedRays, AugmentReport)``."""
    start = time.perf_counter()
    if prepared is None:
        prepared = prepare_scene(bundle, config, sparsity)
    report = AugmentReport(mesh_vertices=prepared.mesh.n_vertices, training_views=len(prepared.camera_indices))
    if config.use_depth_warp:
        report.depth_maps = warp_test_depths(bundle, prepared.camera_indices, config.warp_neighbors)
    report.vertices_processed = len(prepared.vertex_ids)
    if prepared.mesh.empty or report.vertices_processed == 0:
        report.wall_time = time.perf_counter() - start
        return AugmentedRays.empty(), report

    obs = prepared.observations_for(bundle, config.use_visibility_check)
    counts = obs.counts
    live = np.flatnonzero(counts > 0)
    report.vertices_skipped = int(np.sum(counts == 0))
    if live.size == 0:
        report.wall_time = time.perf_counter() - start
        return AugmentedRays.empty(), report

    vids = prepared.vertex_ids[live]
    field = prepared.field
    origins, dirs = _cast_batch(vids, prepared.positions[live], prepared.normals[live], config, field.lo, field.hi)
    r = config.rays_per_vertex
    report.rays_cast = live.size * r

    if config.use_visibility_check:
        lift_normals = None
        if config.casting == "surface_guided":
            lift_normals = np.repeat(prepared.normals[live], r, axis=0)
        vis, _, _ = march_visibility(field, origins.reshape(-1, 3), dirs.reshape(-1, 3), normals=lift_normals)
        vis = vis.reshape(len(live), r)
    else:
        vis = np.ones((len(live), r), dtype=bool)

    labels, kind = _label_group(dirs, obs.directions[live], obs.colors[live], obs.mask[live], vids, config)
    report.sh_vertices = int(np.sum(kind == LABEL_KINDS.index(SH_QUERIED)))
    report.interpolated_vertices = int(np.sum(kind == LABEL_KINDS.index(INTERPOLATED)))
    report.fallback_vertices = int(np.sum(kind == LABEL_KINDS.index(SINGLE_VIEW)))

    flat = vis.ravel()
    rays = AugmentedRays(
        origins.reshape(-1, 3)[flat],
        dirs.reshape(-1, 3)[flat],
        labels.reshape(-1, 3)[flat],
        np.repeat(vids, r)[flat],
        np.repeat(kind, r)[flat],
    )
    report.rays_emitted = len(rays)
    report.rays_rejected = report.rays_cast - report.rays_emitted
    report.wall_time = time.perf_counter() - start
    return rays, report


# ---------------------------------------------------------------- radiance table


SPLIT_RATIOS = ((8, 2), (7, 3), (6, 4), (5, 5))


@dataclass
class SplitResult:
    ratios: list[tuple[int, int]]
    sh_mse: list[float]
    interp_mse: list[float]
    excluded: list[int]

    def rows(self) -> list[tuple[str, str, float]]:
        out = []
        for (k, u), s, i in zip(self.ratios, self.sh_mse, self.interp_mse):
            out.append(("interpolation", f"{k}:{u}", i))
            out.append(("sh", f"{k}:{u}", s))
        return out


def radiance_split_experiment(
    points: Sequence[RadianceSampleSet],
    ratios: Sequence[tuple[int, int]] = SPLIT_RATIOS,
    config: AugmentConfig | None = None,
    seed: int = 42,
) -> SplitResult:
    """Known/unknown splits of each point's samples; mean novel-view MSE of
    SH fitting and of geodesic interpolation from the known part.

    Points must share a sample count so the work batches; the MSE is the
    mean over held-out samples and RGB channels of unclamped predictions.
    """
    config = config or AugmentConfig(seed=seed)
    if not points:
        raise ParameterError("no points given")
    n = len(points[0])
    if any(len(p) != n for p in points):
        raise ParameterError("all points need the same number of samples")
    dirs = np.stack([p.directions for p in points])
    cols = np.stack([p.colors for p in points])
    rng = np.random.default_rng(seed)
    res = SplitResult([], [], [], [])
    for known_part, unknown_part in ratios:
        n_known = int(round(n * known_part / (known_part + unknown_part)))
        n_known = min(max(n_known, 0), n - 1)
        res.ratios.append((known_part, unknown_part))
        if n_known < 2:
            res.sh_mse.append(float("nan"))
            res.interp_mse.append(float("nan"))
            res.excluded.append(len(points))
            continue
        perm = np.argsort(rng.random((len(points), n)), axis=1)
        take = lambda a, idx: np.take_along_axis(a, idx[..., None], axis=1)  # noqa: E731
        kd, kc = take(dirs, perm[:, :n_known]), take(cols, perm[:, :n_known])
        ud, uc = take(dirs, perm[:, n_known:]), take(cols, perm[:, n_known:])
        coeffs, _ = fit_sh_adaptive(
            kd, kc, ud, config.l_max, config.ridge, penalty=config.sh_penalty, max_leverage=config.max_leverage
        )
        sh_pred = eval_sh_batch(coeffs, config.l_max, ud)
        in_pred = interpolate_batch(ud, kd, kc)
        res.sh_mse.append(float(np.mean((sh_pred - uc) ** 2)))
        res.interp_mse.append(float(np.mean((in_pred - uc) ** 2)))
        res.excluded.append(0)
    return res


def synthetic_radiance_points(
    n_points: int = 10000,
    n_samples: int = 40,
    l_max: int = 2,
    amplitude: float = 0.1,
    noise: float = 0.02,
    seed: int = 0,
    constant: bool = False,
) -> list[RadianceSampleSet]:
    """Random band-limited radiance maps sampled on the upper hemisphere.

    Each point gets a base color in [0.3, 0.7] plus SH coefficients of
    degree 1..``l_max`` scaled by ``amplitude``; samples carry Gaussian
    noise of std ``noise``.  ``constant=True`` gives noise-free flat colors.
    """
    from .sh import eval_sh_basis, num_coeffs

    rng = np.random.default_rng(seed)
    b = num_coeffs(l_max)
    coeffs = np.zeros((n_points, b, 3))
    base = rng.uniform(0.3, 0.7, (n_points, 3))
    coeffs[:, 0] = base / eval_sh_basis(0, np.array([0.0, 0.0, 1.0]))[0]
    if not constant:
        coeffs[:, 1:] = amplitude * rng.standard_normal((n_points, b - 1, 3))
    v = rng.standard_normal((n_points, n_samples, 3))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    v[..., 2] = np.abs(v[..., 2])
    colors = eval_sh_batch(coeffs, l_max, v)
    if not constant and noise > 0:
        colors = colors + noise * rng.standard_normal(colors.shape)
    return [RadianceSampleSet(colors[i], v[i]) for i in range(n_points)]

