"""Geometry-informed ray augmentation for sparse-view surface reconstruction.

Submodules: ``sh`` (spherical-harmonic radiance maps), ``geom`` (cameras and
rigid transforms), ``sdf`` (distance fields and sphere tracing), ``mesh``
(marching cubes and the ray/mesh oracle), ``render`` (compositing and
metrics), ``warp`` (depth warping), ``augment`` (the augmentation pipeline),
``scene`` (synthetic scenes) and ``cli``.
"""

__version__ = "0.1.0"
