"""Land-cover-aware spatial gap filling.

Occluded pixels are predicted from clear pixels of the same land-cover class.
Below the occlusion threshold each prediction is a Gaussian-weighted mean over
an ``f x f`` window; above it, the image-wide class mean is used.

The windowed mean is evaluated as a per-class normalized convolution: the
numerator ``K * (T . clear . [L == c])`` and denominator ``K * (clear . [L == c])``
share one truncated Gaussian kernel ``K``, so their ratio equals the direct
weighted sum divided by its weight total. ``K`` is separable because the
Gaussian of the Euclidean distance factors into row and column terms, and
zero padding outside the image is the same as clipping the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy import ndimage

from .errors import FullyOccludedError
from .raster import LandCoverGrid, LstGrid, check_aligned
from .scene import Scene


@dataclass(frozen=True)
class SpatialParams:
    """Window size ``f`` (odd, pixels) and local/global switch ``theta_star``."""

    f: int = 75
    theta_star: float = 0.5

    def __post_init__(self):
        if int(self.f) != self.f or self.f < 3 or self.f % 2 == 0:
            raise ValueError(f"window size f must be an odd integer >= 3, got {self.f}")
        if not 0 < self.theta_star <= 1:
            raise ValueError(f"theta_star must lie in (0, 1], got {self.theta_star}")

    @property
    def sigma(self) -> float:
        return self.f / 2.0

    @property
    def radius(self) -> int:
        return self.f // 2


@dataclass(frozen=True)
class ClassMeans:
    means: Dict[int, float]
    counts: Dict[int, int]

    def get(self, code: int):
        return self.means.get(int(code))


def gaussian_weight(x, sigma: float):
    """Isotropic 2-D Gaussian evaluated at distance ``x`` from the centre."""
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-(x * x) / (2.0 * sigma * sigma)) / (2.0 * math.pi * sigma * sigma)


def gaussian_kernel_1d(params: SpatialParams) -> tuple[np.ndarray, np.ndarray]:
    """Row and column factors of the truncated ``f x f`` kernel.

    ``np.outer(col, row)[i, j] == gaussian_weight(hypot(i - r, j - r), sigma)``.
    The normalising constant sits on the row factor; it cancels in the ratio
    but is kept so the kernel equals the true Gaussian.
    """
    r, s = params.radius, params.sigma
    offsets = np.arange(-r, r + 1, dtype=np.float64)
    profile = np.exp(-(offsets**2) / (2.0 * s * s))
    return profile / (2.0 * math.pi * s * s), profile


def _smooth(arr: np.ndarray, row_k: np.ndarray, col_k: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(arr, row_k, axis=1, mode="constant", cval=0.0)
    return ndimage.correlate1d(out, col_k, axis=0, mode="constant", cval=0.0)


def _class_means(values: np.ndarray, clear: np.ndarray, classes: np.ndarray) -> ClassMeans:
    codes, inverse = np.unique(classes[clear], return_inverse=True)
    sums = np.bincount(inverse, weights=values[clear].astype(np.float64), minlength=codes.size)
    counts = np.bincount(inverse, minlength=codes.size)
    return ClassMeans(
        {int(c): float(s / n) for c, s, n in zip(codes, sums, counts)},
        {int(c): int(n) for c, n in zip(codes, counts)},
    )


def class_means(scene: Scene, land: LandCoverGrid) -> ClassMeans:
    """Mean clear-pixel temperature per land-cover class."""
    check_aligned([scene.lst, land], ["scene", "land cover"])
    return _class_means(scene.lst.values, scene.clear, land.classes)


def _fallback(values, clear, classes, targets, means: ClassMeans, out):
    """Fill ``targets`` with their class mean, else the global clear mean."""
    if not targets.any():
        return
    global_mean = float(values[clear].mean(dtype=np.float64))
    rows, cols = np.nonzero(targets)
    out[rows, cols] = [means.means.get(int(c), global_mean) for c in classes[rows, cols]]


def _local(values, clear, classes, params: SpatialParams):
    """Windowed class-aware mean at every occluded pixel.

    Returns the prediction array and a mask of pixels whose window held no
    clear same-class pixel (left as NaN for the caller's fallback).
    """
    out = values.copy()
    occluded = ~clear
    empty = np.zeros_like(occluded)
    row_k, col_k = gaussian_kernel_1d(params)
    r = params.radius
    h, w = values.shape
    src_vals = np.where(clear, values, 0.0)
    for code in np.unique(classes[occluded]):
        in_class = classes == code
        targets = occluded & in_class
        rows, cols = np.nonzero(targets)
        # every window around a target lies inside this padded bounding box
        r0, r1 = max(rows.min() - r, 0), min(rows.max() + r + 1, h)
        c0, c1 = max(cols.min() - r, 0), min(cols.max() + r + 1, w)
        src = (clear & in_class)[r0:r1, c0:c1].astype(np.float64)
        num = _smooth(src_vals[r0:r1, c0:c1] * src, row_k, col_k)
        den = _smooth(src, row_k, col_k)
        tr, tc = rows - r0, cols - c0
        d = den[tr, tc]
        ok = d > 0
        pred = np.full(d.shape, np.nan)
        pred[ok] = num[tr[ok], tc[ok]] / d[ok]
        out[rows, cols] = pred
        empty[rows[~ok], cols[~ok]] = True
    return out, empty


def _spatial(values, clear, classes, theta: float, params: SpatialParams):
    """Core spatial channel on raw arrays.

    Returns ``(prediction, fallback_mask)``; ``fallback_mask`` marks pixels
    that used the class-mean or global-mean fallback in the local branch,
    or the global mean in the global branch when their class had no clear pixel.
    """
    if not clear.any():
        raise FullyOccludedError()
    means = _class_means(values, clear, classes)
    if theta < params.theta_star:
        out, fallback = _local(values, clear, classes, params)
        _fallback(values, clear, classes, fallback, means, out)
    else:
        out = values.copy()
        out[~clear] = np.nan
        fallback = ~clear & ~np.isin(classes, list(means.means))
        _fallback(values, clear, classes, ~clear, means, out)
    return out, fallback


def local_filter(scene: Scene, land: LandCoverGrid, params: SpatialParams = SpatialParams()) -> LstGrid:
    """Gaussian-weighted, class-matched prediction of every occluded pixel.

    Clear pixels pass through unchanged. Pixels without any clear same-class
    neighbour in their window fall back to the class mean, then to the
    clear-pixel mean of the whole image.
    """
    check_aligned([scene.lst, land], ["scene", "land cover"])
    clear = scene.clear
    if not clear.any():
        raise FullyOccludedError()
    means = _class_means(scene.lst.values, clear, land.classes)
    out, fallback = _local(scene.lst.values, clear, land.classes, params)
    _fallback(scene.lst.values, clear, land.classes, fallback, means, out)
    return scene.lst.replace(out, np.ones(out.shape, dtype=bool))


def window_weights(scene: Scene, land: LandCoverGrid, params: SpatialParams, row: int, col: int):
    """Normalized weights the local filter applies around pixel ``(row, col)``.

    Returns ``(weights, (r0, r1, c0, c1))`` where ``weights`` covers the
    clipped window ``[r0:r1, c0:c1]``. All-zero if the window has no clear
    same-class pixel.
    """
    r = params.radius
    h, w = scene.shape.as_tuple()
    r0, r1, c0, c1 = max(row - r, 0), min(row + r + 1, h), max(col - r, 0), min(col + r + 1, w)
    yy, xx = np.mgrid[r0:r1, c0:c1]
    g = gaussian_weight(np.hypot(yy - row, xx - col), params.sigma)
    g = g * scene.clear[r0:r1, c0:c1] * (land.classes[r0:r1, c0:c1] == land.classes[row, col])
    alpha = g.sum()
    return (g / alpha if alpha > 0 else g), (r0, r1, c0, c1)


def spatial_channel(scene: Scene, land: LandCoverGrid, params: SpatialParams = SpatialParams()) -> LstGrid:
    """Local filtering below ``theta_star``, class-mean infill at or above it."""
    return scene.lst.replace(spatial_prediction(scene, land, params)[0], np.ones(scene.shape.as_tuple(), dtype=bool))


def spatial_prediction(scene: Scene, land: LandCoverGrid, params: SpatialParams = SpatialParams()):
    """Like :func:`spatial_channel` but returns ``(values, fallback_mask)`` arrays."""
    check_aligned([scene.lst, land], ["scene", "land cover"])
    return _spatial(scene.lst.values, scene.clear, land.classes, scene.theta, params)
