"""On-disk formats for images and depth maps.

Raw float files carry one ASCII header line followed by little-endian
float32 data in row-major order::

    GEOAUG-RGBF <width> <height>\\n      then height*width*3 floats
    GEOAUG-DEPTH <width> <height> nan\\n then height*width floats, NaN = invalid
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .render import DepthMap, ImageBuffer


def to_bytes8(img: ImageBuffer) -> np.ndarray:
    return np.round(np.clip(img.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_ppm(path, img: ImageBuffer) -> None:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + to_bytes8(img).tobytes())


def read_ppm(path) -> ImageBuffer:
    raw = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos].decode("ascii"))
    if fields[0] != "P6" or fields[3] != "255":
        raise ParameterError(f"{path}: only 8-bit binary PPM is supported")
    w, h = int(fields[1]), int(fields[2])
    data = np.frombuffer(raw[pos + 1 : pos + 1 + w * h * 3], dtype=np.uint8)
    return ImageBuffer(data.reshape(h, w, 3) / 255.0)


def _write_raw(path, header: str, arr: np.ndarray) -> None:
    Path(path).write_bytes(header.encode("ascii") + np.asarray(arr, dtype="<f4").tobytes())


def _read_raw(path, magic: str):
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    parts = raw[:nl].decode("ascii").split()
    if not parts or parts[0] != magic:
        raise ParameterError(f"{path}: expected a {magic} file")
    return parts, np.frombuffer(raw[nl + 1 :], dtype="<f4").astype(float)


def write_rgbf(path, img: ImageBuffer) -> None:
    _write_raw(path, f"GEOAUG-RGBF {img.width} {img.height}\n", img.pixels)


def read_rgbf(path) -> ImageBuffer:
    parts, data = _read_raw(path, "GEOAUG-RGBF")
    w, h = int(parts[1]), int(parts[2])
    return ImageBuffer(data.reshape(h, w, 3))


def write_depth(path, depth: DepthMap) -> None:
    _write_raw(path, f"GEOAUG-DEPTH {depth.width} {depth.height} nan\n", depth.depths)


def read_depth(path) -> DepthMap:
    parts, data = _read_raw(path, "GEOAUG-DEPTH")
    w, h = int(parts[1]), int(parts[2])
    return DepthMap(data.reshape(h, w))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
