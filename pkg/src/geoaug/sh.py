"""Real spherical harmonics: basis evaluation, radiance-map fitting and the
geodesic interpolation baseline.

Convention: real orthonormal basis, Condon-Shortley phase omitted, indexed
row-wise ``l = 0..l_max, m = -l..l`` (flat index ``l*l + l + m``).  Closed
forms, with ``(x, y, z)`` a unit direction::

    l=0          0.5*sqrt(1/pi)
    l=1  m=-1    sqrt(3/(4pi)) * y
         m= 0    sqrt(3/(4pi)) * z
         m= 1    sqrt(3/(4pi)) * x
    l=2  m=-2    0.5*sqrt(15/pi) * x*y
         m=-1    0.5*sqrt(15/pi) * y*z
         m= 0    0.25*sqrt(5/pi) * (3z^2 - 1)
         m= 1    0.5*sqrt(15/pi) * x*z
         m= 2    0.25*sqrt(15/pi) * (x^2 - y^2)
    l=3  m=-3    0.25*sqrt(35/(2pi)) * y*(3x^2 - y^2)
         m=-2    0.5*sqrt(105/pi) * x*y*z
         m=-1    0.25*sqrt(21/(2pi)) * y*(5z^2 - 1)
         m= 0    0.25*sqrt(7/pi) * z*(5z^2 - 3)
         m= 1    0.25*sqrt(21/(2pi)) * x*(5z^2 - 1)
         m= 2    0.25*sqrt(105/pi) * z*(x^2 - y^2)
         m= 3    0.25*sqrt(35/(2pi)) * x*(x^2 - 3y^2)
    l=4  m=-4    0.75*sqrt(35/pi) * x*y*(x^2 - y^2)
         m=-3    0.75*sqrt(35/(2pi)) * y*z*(3x^2 - y^2)
         m=-2    0.75*sqrt(5/pi) * x*y*(7z^2 - 1)
         m=-1    0.75*sqrt(5/(2pi)) * y*z*(7z^2 - 3)
         m= 0    (3/16)*sqrt(1/pi) * (35z^4 - 30z^2 + 3)
         m= 1    0.75*sqrt(5/(2pi)) * x*z*(7z^2 - 3)
         m= 2    (3/8)*sqrt(5/pi) * (x^2 - y^2)*(7z^2 - 1)
         m= 3    0.75*sqrt(35/(2pi)) * x*z*(x^2 - 3y^2)
         m= 4    (3/16)*sqrt(35/pi) * (x^2(x^2 - 3y^2) - y^2(3x^2 - y^2))

The evaluator below does not use these tables; it runs the associated
Legendre recurrence in Cartesian form so every band up to ``MAX_L_MAX`` shares
one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegeneratePairError,
    InsufficientSamplesError,
    ParameterError,
    UnderdeterminedError,
)

MAX_L_MAX = 8
DEFAULT_L_MAX = 2
DEFAULT_RIDGE = 1e-4
# reciprocal condition number below which the normal equations are
# treated as singular and solved with a pseudo-inverse instead
_RCOND = 1e-12
PENALTIES = ("uniform", "laplacian")


def num_coeffs(l_max: int) -> int:
    return (l_max + 1) ** 2


def unit(v) -> np.ndarray:
    """Normalize ``v`` along the last axis; zero vectors are rejected."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0) or not np.all(np.isfinite(n)):
        raise ParameterError("direction must be a finite non-zero vector")
    return v / n


def _check_l_max(l_max: int) -> None:
    if not (isinstance(l_max, (int, np.integer)) and 0 <= l_max <= MAX_L_MAX):
        raise ParameterError(f"l_max must be an integer in [0, {MAX_L_MAX}], got {l_max!r}")


def eval_sh_basis(l_max: int, d) -> np.ndarray:
    """Evaluate all real SH basis functions up to ``l_max``.

    ``d`` is a direction of shape ``(3,)`` or a batch ``(..., 3)``,
    normalized here; the result has shape ``(..., (l_max+1)**2)``.
    """
    _check_l_max(l_max)
    d = unit(d)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    out = np.empty(d.shape[:-1] + (num_coeffs(l_max),))

    # Re/Im of (x + iy)^m give sin^m(theta) cos(m phi), sin^m(theta) sin(m phi)
    cos_m = [np.ones_like(x)]
    sin_m = [np.zeros_like(x)]
    for m in range(1, l_max + 1):
        c, s = cos_m[-1], sin_m[-1]
        cos_m.append(x * c - y * s)
        sin_m.append(x * s + y * c)

    for m in range(l_max + 1):
        # Pbar_l^m(z) = P_l^m(z) / sin^m(theta), no Condon-Shortley phase
        p_prev2 = None
        p_prev = np.full_like(z, float(_double_factorial(2 * m - 1)))
        for l in range(m, l_max + 1):
            if l == m:
                p = p_prev
            elif l == m + 1:
                p = z * (2 * m + 1) * p_prev
            else:
                p = ((2 * l - 1) * z * p_prev - (l + m - 1) * p_prev2) / (l - m)
            if l > m:
                p_prev2, p_prev = p_prev, p
            k = math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m))
            if m == 0:
                out[..., l * l + l] = k * p
            else:
                out[..., l * l + l + m] = math.sqrt(2.0) * k * p * cos_m[m]
                out[..., l * l + l - m] = math.sqrt(2.0) * k * p * sin_m[m]
    return out


def _double_factorial(n: int) -> int:
    r = 1
    while n > 1:
        r *= n
        n -= 2
    return r


@dataclass(frozen=True)
class ShExpansion:
    """RGB coefficients of a real SH expansion, shape ``((l_max+1)**2, 3)``."""

    l_max: int
    coeffs: np.ndarray

    def __post_init__(self):
        _check_l_max(self.l_max)
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (num_coeffs(self.l_max), 3):
            raise ParameterError(
                f"coeffs must have shape ({num_coeffs(self.l_max)}, 3), got {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ParameterError("SH coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def to_text(self) -> str:
        lines = [str(self.l_max)]
        i = 0
        for l in range(self.l_max + 1):
            for m in range(-l, l + 1):
                kr, kg, kb = (repr(float(v)) for v in self.coeffs[i])
                lines.append(f"{l} {m} {kr} {kg} {kb}")
                i += 1
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ShExpansion":
        rows = [ln.split() for ln in text.strip().splitlines()]
        if not rows or len(rows[0]) != 1:
            raise ParameterError("SH record must start with a single l_max line")
        l_max = int(rows[0][0])
        body = rows[1:]
        if len(body) != num_coeffs(l_max):
            raise ParameterError(f"expected {num_coeffs(l_max)} coefficient lines, got {len(body)}")
        coeffs = np.zeros((num_coeffs(l_max), 3))
        for row in body:
            l, m = int(row[0]), int(row[1])
            if not (0 <= l <= l_max and -l <= m <= l):
                raise ParameterError(f"bad (l, m) = ({l}, {m})")
            coeffs[l * l + l + m] = [float(v) for v in row[2:5]]
        return cls(l_max, coeffs)


@dataclass(frozen=True)
class RadianceSampleSet:
    """Color observations of one surface point and the unit directions they
    were seen from (surface toward camera)."""

    colors: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        c = np.array(self.colors, dtype=float).reshape(-1, 3)
        d = np.array(self.directions, dtype=float).reshape(-1, 3)
        if len(c) != len(d):
            raise ParameterError("colors and directions must have equal length")
        if not np.all(np.isfinite(c)):
            raise ParameterError("sample colors must be finite")
        if len(d):
            d = unit(d)
        c.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "colors", c)
        object.__setattr__(self, "directions", d)

    def __len__(self) -> int:
        return len(self.colors)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple]) -> "RadianceSampleSet":
        if not pairs:
            return cls(np.zeros((0, 3)), np.zeros((0, 3)))
        colors, dirs = zip(*pairs)
        return cls(np.array(colors), np.array(dirs))


def fit_sh_batch(
    directions: np.ndarray,
    colors: np.ndarray,
    l_max: int = DEFAULT_L_MAX,
    ridge: float = DEFAULT_RIDGE,
    mask: np.ndarray | None = None,
    penalty: str = "uniform",
) -> np.ndarray:
    """Fit one SH expansion per point.

    directions, colors: ``(P, N, 3)``; mask: optional ``(P, N)`` booleans
    marking which of the N slots hold real samples.  Returns ``(P, B, 3)``.
    One Gram matrix per point is shared across the three color channels.

    ``penalty="uniform"`` adds ``ridge * |k|^2``.  ``"laplacian"`` weights
    each coefficient by ``l(l+1)`` instead, which leaves the mean color
    unpenalized and damps high bands hardest.
    """
    if ridge < 0:
        raise ParameterError("ridge must be non-negative")
    if penalty not in PENALTIES:
        raise ParameterError(f"penalty must be one of {PENALTIES}")
    directions = np.asarray(directions, dtype=float)
    colors = np.asarray(colors, dtype=float)
    n_basis = num_coeffs(l_max)
    if mask is None:
        mask = np.ones(directions.shape[:2], dtype=bool)
    counts = mask.sum(axis=1)
    if np.any(counts == 0):
        raise InsufficientSamplesError("every point needs at least one sample")
    if ridge == 0 and np.any(counts < n_basis):
        raise UnderdeterminedError(
            f"{int(counts.min())} samples for {n_basis} basis functions with ridge=0; "
            "lower l_max or use ridge > 0"
        )
    safe_dirs = np.where(mask[..., None], directions, np.array([0.0, 0.0, 1.0]))
    a = eval_sh_basis(l_max, safe_dirs) * mask[..., None]
    w_colors = colors * mask[..., None]
    gram = np.einsum("pni,pnj->pij", a, a) + ridge * np.diag(penalty_weights(l_max, penalty))
    rhs = np.einsum("pni,pnc->pic", a, w_colors)

    eig = np.linalg.eigvalsh(gram)
    singular = eig[:, 0] <= _RCOND * np.maximum(eig[:, -1], np.finfo(float).tiny)
    out = np.empty((len(gram), n_basis, 3))
    ok = ~singular
    if np.any(ok):
        out[ok] = np.linalg.solve(gram[ok], rhs[ok])
    if np.any(singular):
        out[singular] = np.linalg.pinv(gram[singular], rcond=_RCOND, hermitian=True) @ rhs[singular]
    return out


def penalty_weights(l_max: int, penalty: str = "uniform") -> np.ndarray:
    """Per-coefficient ridge weights in flat ``(l, m)`` order."""
    if penalty == "uniform":
        return np.ones(num_coeffs(l_max))
    ell = np.repeat(np.arange(l_max + 1), 2 * np.arange(l_max + 1) + 1)
    return (ell * (ell + 1)).astype(float)


def fit_sh(
    samples: RadianceSampleSet,
    l_max: int = DEFAULT_L_MAX,
    ridge: float = DEFAULT_RIDGE,
    penalty: str = "uniform",
) -> ShExpansion:
    """Least-squares SH radiance map with optional Tikhonov ridge."""
    _check_l_max(l_max)
    if len(samples) == 0:
        raise InsufficientSamplesError("cannot fit an empty sample set")
    coeffs = fit_sh_batch(samples.directions[None], samples.colors[None], l_max, ridge, penalty=penalty)[0]
    return ShExpansion(l_max, coeffs)


def mean_leverage(
    directions: np.ndarray,
    queries: np.ndarray,
    l_max: int = DEFAULT_L_MAX,
    ridge: float = DEFAULT_RIDGE,
    mask: np.ndarray | None = None,
    penalty: str = "uniform",
) -> np.ndarray:
    """Mean of ``y(q)^T (A^T A + ridge W)^-1 y(q)`` over each point's query
    directions: how strongly sample noise is amplified where the fit will be
    evaluated.  directions ``(P, N, 3)``, queries ``(P, M, 3)``; returns ``(P,)``."""
    directions = np.asarray(directions, dtype=float)
    if mask is None:
        mask = np.ones(directions.shape[:2], dtype=bool)
    safe = np.where(mask[..., None], directions, np.array([0.0, 0.0, 1.0]))
    a = eval_sh_basis(l_max, safe) * mask[..., None]
    gram = np.einsum("pni,pnj->pij", a, a) + ridge * np.diag(penalty_weights(l_max, penalty))
    y = eval_sh_basis(l_max, np.asarray(queries, dtype=float))
    sol = np.linalg.solve(gram, np.swapaxes(y, 1, 2))
    return np.einsum("pmi,pim->pm", y, sol).mean(axis=1)


def fit_sh_adaptive(
    directions: np.ndarray,
    colors: np.ndarray,
    queries: np.ndarray,
    l_max: int = DEFAULT_L_MAX,
    ridge: float = DEFAULT_RIDGE,
    mask: np.ndarray | None = None,
    penalty: str = "uniform",
    max_leverage: float = np.inf,
):
    """Per point, fit the highest band ``L <= l_max`` whose mean leverage at
    ``queries`` stays within ``max_leverage`` (band 0 always qualifies).

    Views strung along one line leave most of the sphere unconstrained; a
    full-band fit there extrapolates noise.  The choice uses directions only,
    never colors.  Returns ``(coeffs (P, B, 3) zero-padded, bands (P,))``.
    """
    directions = np.asarray(directions, dtype=float)
    colors = np.asarray(colors, dtype=float)
    queries = np.asarray(queries, dtype=float)
    if mask is None:
        mask = np.ones(directions.shape[:2], dtype=bool)
    n = len(directions)
    bands = np.zeros(n, dtype=int)
    undecided = np.ones(n, dtype=bool)
    for band in range(l_max, 0, -1):
        idx = np.flatnonzero(undecided)
        if idx.size == 0:
            break
        counts = mask[idx].sum(axis=1)
        ok = np.zeros(idx.size, dtype=bool)
        # with ridge 0 an underdetermined band is never eligible
        cand = counts >= num_coeffs(band) if ridge == 0 else np.ones(idx.size, dtype=bool)
        if np.any(cand):
            lev = mean_leverage(directions[idx[cand]], queries[idx[cand]], band, ridge, mask[idx[cand]], penalty)
            ok[cand] = lev <= max_leverage
        bands[idx[ok]] = band
        undecided[idx[ok]] = False
    out = np.zeros((n, num_coeffs(l_max), 3))
    for band in np.unique(bands):
        sel = bands == band
        out[sel, : num_coeffs(band)] = fit_sh_batch(directions[sel], colors[sel], band, ridge, mask[sel], penalty)
    return out, bands


def eval_sh_batch(coeffs: np.ndarray, l_max: int, directions: np.ndarray) -> np.ndarray:
    """Unclamped radiance of ``(P, B, 3)`` expansions at ``(P, M, 3)`` directions."""
    basis = eval_sh_basis(l_max, directions)
    return np.einsum("pmb,pbc->pmc", basis, coeffs)


def query_sh(exp: ShExpansion, d, clamp: bool = True) -> np.ndarray:
    """Radiance of ``exp`` toward ``d`` (``(3,)`` or ``(..., 3)``)."""
    c = eval_sh_basis(exp.l_max, unit(d)) @ exp.coeffs
    return np.clip(c, 0.0, 1.0) if clamp else c


def geodesic_distance(v1, v2) -> np.ndarray | float:
    """Great-circle angle between unit vectors, broadcasting over leading axes."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    cross = np.linalg.norm(np.cross(v1, v2), axis=-1)
    dot = np.sum(v1 * v2, axis=-1)
    return np.arctan2(cross, dot)


def _slerp_weight(d_t1, d_t2, literal: bool):
    # weight on the first color; endpoint-consistent unless literal
    num = d_t1 if literal else d_t2
    return num / (d_t1 + d_t2)


def slerp_radiance(target, s1: tuple, s2: tuple, literal: bool = False) -> np.ndarray:
    """Blend two observations by geodesic distance to ``target``.

    ``s1``/``s2`` are ``(color, direction)`` pairs.  The default weighting
    returns exactly ``c1`` when ``target`` equals the first direction.  With
    ``literal=True`` the weight is ``d(target, v1) / (d(v1, target) +
    d(target, v2))`` applied to ``c1``, which instead returns ``c2`` there.
    """
    c1, v1 = np.asarray(s1[0], dtype=float), unit(s1[1])
    c2, v2 = np.asarray(s2[0], dtype=float), unit(s2[1])
    if geodesic_distance(v1, v2) == 0.0:
        raise DegeneratePairError("interpolation endpoints have the same direction")
    t = unit(target)
    w = _slerp_weight(geodesic_distance(t, v1), geodesic_distance(t, v2), literal)
    return w * c1 + (1.0 - w) * c2


def interpolate_from_set(target, samples: RadianceSampleSet, literal: bool = False) -> np.ndarray:
    """Geodesic interpolation from the two samples nearest to ``target``."""
    if len(samples) < 2:
        raise InsufficientSamplesError("interpolation needs at least two samples")
    t = unit(target)
    dist = geodesic_distance(samples.directions, t)
    i, j = np.argsort(dist, kind="stable")[:2]
    return slerp_radiance(
        t,
        (samples.colors[i], samples.directions[i]),
        (samples.colors[j], samples.directions[j]),
        literal=literal,
    )


def interpolate_batch(
    targets: np.ndarray,
    directions: np.ndarray,
    colors: np.ndarray,
    mask: np.ndarray | None = None,
    literal: bool = False,
) -> np.ndarray:
    """Vectorized :func:`interpolate_from_set`.

    targets ``(P, M, 3)``; directions, colors ``(P, K, 3)``; mask ``(P, K)``.
    Returns ``(P, M, 3)``.
    """
    targets = np.asarray(targets, dtype=float)
    directions = np.asarray(directions, dtype=float)
    colors = np.asarray(colors, dtype=float)
    if mask is None:
        mask = np.ones(directions.shape[:2], dtype=bool)
    if np.any(mask.sum(axis=1) < 2):
        raise InsufficientSamplesError("interpolation needs at least two samples per point")
    out = np.empty(targets.shape[:2] + (3,))
    for lo in range(0, len(targets), _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        out[sl] = _interpolate_chunk(targets[sl], directions[sl], colors[sl], mask[sl], literal)
    return out


_CHUNK = 256


def _interpolate_chunk(targets, directions, colors, mask, literal):
    dist = geodesic_distance(targets[:, :, None, :], directions[:, None, :, :])
    dist = np.where(mask[:, None, :], dist, np.inf)
    order = np.argsort(dist, axis=-1, kind="stable")[..., :2]
    p_idx = np.arange(len(targets))[:, None]
    v1 = directions[p_idx, order[..., 0]]
    v2 = directions[p_idx, order[..., 1]]
    if np.any(geodesic_distance(v1, v2) == 0.0):
        raise DegeneratePairError("interpolation endpoints have the same direction")
    d1 = np.take_along_axis(dist, order[..., :1], axis=-1)[..., 0]
    d2 = np.take_along_axis(dist, order[..., 1:2], axis=-1)[..., 0]
    w = _slerp_weight(d1, d2, literal)
    c1 = colors[p_idx, order[..., 0]]
    c2 = colors[p_idx, order[..., 1]]
    return w[..., None] * c1 + (1.0 - w[..., None]) * c2
