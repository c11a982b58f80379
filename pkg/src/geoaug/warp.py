"""Forward depth warping between posed views and the edge-aware depth
smoothness loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .geom import PinholeCamera, pixel_grid, relative_transform
from .render import DepthMap, ImageBuffer


@dataclass(frozen=True)
class WarpResult:
    depth: DepthMap
    hit_count: np.ndarray


def warp_depth(ref_depth: DepthMap, ref_cam: PinholeCamera, unseen_cam: PinholeCamera) -> WarpResult:
    """Splat every valid reference pixel into ``unseen_cam``.

    Targets are the nearest pixel centers; when several sources land on one
    target the smallest target-frame depth is kept.  Sources behind the
    unseen camera or outside its image are dropped.
    """
    if (ref_depth.width, ref_depth.height) != (ref_cam.width, ref_cam.height):
        raise ParameterError("reference depth map does not match the reference camera")
    h_out, w_out = unseen_cam.height, unseen_cam.width
    out = np.full(h_out * w_out, np.inf)
    counts = np.zeros(h_out * w_out, dtype=np.int64)

    valid = ref_depth.valid
    if np.any(valid):
        pix = pixel_grid(ref_cam.width, ref_cam.height)[valid]
        z = ref_depth.depths[valid]
        pc = np.stack(
            [(pix[:, 0] - ref_cam.cx) / ref_cam.fx * z, (pix[:, 1] - ref_cam.cy) / ref_cam.fy * z, z],
            axis=-1,
        )
        q = relative_transform(ref_cam, unseen_cam).apply(pc)
        zq = q[:, 2]
        front = zq > 0
        q, zq = q[front], zq[front]
        u = np.floor(unseen_cam.fx * q[:, 0] / zq + unseen_cam.cx + 0.5).astype(np.int64)
        v = np.floor(unseen_cam.fy * q[:, 1] / zq + unseen_cam.cy + 0.5).astype(np.int64)
        inside = (u >= 0) & (u < w_out) & (v >= 0) & (v < h_out)
        flat = v[inside] * w_out + u[inside]
        np.minimum.at(out, flat, zq[inside])
        counts += np.bincount(flat, minlength=h_out * w_out)

    out[counts == 0] = np.nan
    return WarpResult(DepthMap(out.reshape(h_out, w_out)), counts.reshape(h_out, w_out))


def merge_warps(results: list[WarpResult]) -> WarpResult:
    """Combine warps from several references with the same smallest-depth rule."""
    if not results:
        raise ParameterError("nothing to merge")
    stack = np.stack([r.depth.depths for r in results])
    counts = np.sum([r.hit_count for r in results], axis=0)
    merged = np.where(counts > 0, np.nanmin(np.where(np.isnan(stack), np.inf, stack), axis=0), np.nan)
    return WarpResult(DepthMap(merged), counts)


def _second_differences(d: np.ndarray):
    c = d[1:-1, 1:-1]
    dxx = d[1:-1, 2:] - 2 * c + d[1:-1, :-2]
    dyy = d[2:, 1:-1] - 2 * c + d[:-2, 1:-1]
    dxy = (d[2:, 2:] - d[2:, :-2] - d[:-2, 2:] + d[:-2, :-2]) / 4.0
    return dxx, dxy, dyy


def image_laplacian_magnitude(image: np.ndarray) -> np.ndarray:
    """Channel-mean of ``|5-point Laplacian|`` on interior pixels."""
    c = image[1:-1, 1:-1]
    lap = image[1:-1, 2:] + image[1:-1, :-2] + image[2:, 1:-1] + image[:-2, 1:-1] - 4 * c
    return np.abs(lap).mean(axis=-1)


def smoothness_loss(depth: DepthMap, image: ImageBuffer, inverse: bool = True) -> float:
    """Mean of ``exp(-|lap I|) * (|d_xx| + |d_xy| + |d_yy|)`` over interior
    pixels whose whole 3x3 neighbourhood is valid.

    ``inverse=True`` applies the stencils to ``1 / depth``.
    """
    if depth.depths.shape != image.pixels.shape[:2]:
        raise ParameterError("depth map and image sizes differ")
    if depth.width < 3 or depth.height < 3:
        raise ParameterError("smoothness loss needs at least a 3x3 map")
    d = depth.depths
    if inverse:
        d = 1.0 / d
    valid = depth.valid
    ok = np.ones((depth.height - 2, depth.width - 2), dtype=bool)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            ok &= valid[dy : dy + depth.height - 2, dx : dx + depth.width - 2]
    if not np.any(ok):
        return 0.0
    dxx, dxy, dyy = _second_differences(np.where(valid, d, 0.0))
    weight = np.exp(-image_laplacian_magnitude(image.pixels))
    term = weight * (np.abs(dxx) + np.abs(dxy) + np.abs(dyy))
    return float(term[ok].mean())
