"""Alpha compositing along rays and image / depth quality metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import convolve2d

from .errors import EmptyOverlapError, ParameterError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class SamplePoint:
    t: float
    alpha: float
    color: np.ndarray


@dataclass(frozen=True)
class ImageBuffer:
    """Linear RGB raster, ``pixels`` shaped ``(height, width, 3)``."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.array(self.pixels, dtype=float)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ParameterError(f"image pixels must be (H, W, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ParameterError("image channels must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class DepthMap:
    """Z-depth raster ``(height, width)``; NaN marks invalid pixels."""

    depths: np.ndarray

    def __post_init__(self):
        d = np.array(self.depths, dtype=float)
        if d.ndim != 2:
            raise ParameterError(f"depth map must be 2-D, got {d.shape}")
        valid = ~np.isnan(d)
        if np.any(~np.isfinite(d[valid])) or np.any(d[valid] <= 0):
            raise ParameterError("valid depths must be positive and finite")
        d.setflags(write=False)
        object.__setattr__(self, "depths", d)

    @property
    def width(self) -> int:
        return self.depths.shape[1]

    @property
    def height(self) -> int:
        return self.depths.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.depths)


def composite_arrays(t, alpha, colors):
    """Batched compositing: ``t``, ``alpha`` ``(..., N)``; ``colors`` ``(..., N, 3)``.

    Returns ``(color, transmittance)`` where ``transmittance[..., i]`` is the
    product of ``1 - alpha`` over all earlier samples.
    """
    t = np.asarray(t, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    colors = np.asarray(colors, dtype=float)
    if np.any((alpha < 0) | (alpha > 1)):
        raise ParameterError("alpha must lie in [0, 1]")
    if t.shape[-1] > 1 and np.any(np.diff(t, axis=-1) <= 0):
        raise ParameterError("sample positions must be strictly increasing")
    survive = np.cumprod(1.0 - alpha, axis=-1)
    trans = np.concatenate([np.ones(alpha.shape[:-1] + (1,)), survive[..., :-1]], axis=-1)
    weights = trans * alpha
    return np.sum(weights[..., None] * colors, axis=-2), trans


def composite(samples: Sequence[SamplePoint]):
    """Composite one ray's ordered samples.  Returns ``(rgb, transmittances)``."""
    if not samples:
        return np.zeros(3), np.zeros(0)
    t = np.array([s.t for s in samples], dtype=float)
    a = np.array([s.alpha for s in samples], dtype=float)
    c = np.array([np.asarray(s.color, dtype=float) for s in samples])
    return composite_arrays(t, a, c)


def _same_shape(a: ImageBuffer, b: ImageBuffer) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise ParameterError(f"image sizes differ: {a.pixels.shape} vs {b.pixels.shape}")


def mse_loss(predicted: ImageBuffer, truth: ImageBuffer) -> float:
    """Mean over pixels and channels (a sum over rays divided by 3*W*H)."""
    _same_shape(predicted, truth)
    return float(np.mean((predicted.pixels - truth.pixels) ** 2))


def psnr(predicted: ImageBuffer, truth: ImageBuffer) -> float:
    """Peak 1.0; ``inf`` for identical buffers."""
    mse = mse_loss(predicted, truth)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def luma(img: ImageBuffer) -> np.ndarray:
    return img.pixels @ LUMA


def ssim(predicted: ImageBuffer, truth: ImageBuffer) -> float:
    """Mean SSIM of the luma channel over all fully-covered 11x11 windows."""
    _same_shape(predicted, truth)
    if min(predicted.width, predicted.height) < SSIM_WINDOW:
        raise ParameterError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    x, y = luma(predicted), luma(truth)
    w = gaussian_window()

    def filt(a):
        return convolve2d(a, w, mode="valid")

    mx, my = filt(x), filt(y)
    sxx = filt(x * x) - mx * mx
    syy = filt(y * y) - my * my
    sxy = filt(x * y) - mx * my
    num = (2 * mx * my + SSIM_C1) * (2 * sxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (sxx + syy + SSIM_C2)
    return float(np.mean(num / den))


def depth_metrics(predicted: DepthMap, truth: DepthMap) -> tuple[float, float]:
    """``(absrel, rmse)`` over pixels valid in both maps."""
    if predicted.depths.shape != truth.depths.shape:
        raise ParameterError("depth map sizes differ")
    both = predicted.valid & truth.valid
    if not np.any(both):
        raise EmptyOverlapError("no pixel is valid in both depth maps")
    p, t = predicted.depths[both], truth.depths[both]
    absrel = float(np.mean(np.abs(p - t) / t))
    rmse = float(np.sqrt(np.mean((p - t) ** 2)))
    return absrel, rmse
