"""Seeded synthetic scenes with land-cover-structured temperature fields.

Used by the test suite, the acceptance harness and ``lstfill synth``. Fields
are a per-class mean, plus a smooth planar gradient shared by all dates, plus
i.i.d. Gaussian noise. Clouds are blobby masks hitting a requested fraction.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import yaml
from scipy import ndimage

from .qa import OcclusionMask, QaPolicy
from .raster import NLCD_LEGEND, BitfieldGrid, GeoRef, LandCoverGrid, LstGrid, write_grid
from .scene import Scene
from .temporal import SceneCatalog

DEFAULT_CODES = (11, 24, 41, 82, 90, 21)


def make_georef(origin=(500000.0, 3300000.0), pixel=30.0, crs_id="EPSG:32615") -> GeoRef:
    return GeoRef(origin, (pixel, -pixel), crs_id)


def _blobs(shape, rng, smooth):
    return ndimage.gaussian_filter(rng.standard_normal(shape), smooth, mode="wrap")


def make_land_cover(shape, n_classes: int, rng, codes: Sequence[int] = DEFAULT_CODES, smooth=None) -> LandCoverGrid:
    """Blobby class map: argmax over ``n_classes`` smoothed noise fields."""
    smooth = smooth if smooth is not None else max(shape) / 12.0
    fields = np.stack([_blobs(shape, rng, smooth) for _ in range(n_classes)])
    idx = fields.argmax(axis=0)
    codes = np.asarray(codes[:n_classes], dtype=np.int32)
    legend = {int(c): NLCD_LEGEND.get(int(c), str(c)) for c in codes}
    return LandCoverGrid(make_georef(), codes[idx], legend)


def cloud_mask(shape, theta: float, rng, smooth=None) -> np.ndarray:
    """Blobby boolean mask with exactly ``round(theta * size)`` pixels set."""
    k = int(round(theta * shape[0] * shape[1]))
    mask = np.zeros(shape, dtype=bool)
    if k == 0:
        return mask
    smooth = smooth if smooth is not None else max(shape) / 16.0
    field = _blobs(shape, rng, smooth).ravel()
    mask.ravel()[np.argsort(-field, kind="stable")[:k]] = True
    return mask


def planar_gradient(shape, amplitude: float, rng) -> np.ndarray:
    """Linear ramp in a random direction spanning ``amplitude`` kelvin."""
    h, w = shape
    ang = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:h, 0:w]
    ramp = np.cos(ang) * xx / max(w - 1, 1) + np.sin(ang) * yy / max(h - 1, 1)
    ramp -= ramp.min()
    span = ramp.max()
    return amplitude * (ramp / span - 0.5) if span > 0 else np.zeros(shape)


def separated_means(n_classes: int, rng, base=300.0, min_gap=5.0) -> np.ndarray:
    """Class means at least ``min_gap`` apart, in shuffled order."""
    steps = min_gap + rng.uniform(0.0, 2.0, n_classes)
    means = base + np.cumsum(steps) - steps.sum() / 2
    return rng.permutation(means)


@dataclass
class SyntheticCase:
    catalog: SceneCatalog
    truth: Dict[dt.date, np.ndarray]
    target_date: dt.date


def make_case(
    seed: int,
    shape=(96, 96),
    n_classes: int = 3,
    n_scenes: int = 5,
    target_index: Optional[int] = None,
    target_theta: float = 0.05,
    ref_theta: float = 0.02,
    gradient: float = 2.0,
    noise: float = 0.5,
    min_gap: float = 5.0,
    drift: float = 1.5,
    start: dt.date = dt.date(2021, 6, 1),
    cycle_days: int = 16,
) -> SyntheticCase:
    """Catalog of ``n_scenes`` scenes ``cycle_days`` apart with known truth.

    The target scene (middle by default) is occluded at ``target_theta``;
    all other scenes at ``ref_theta``. Each date shifts every class mean by
    its own random drift so references need a per-class adjustment.
    """
    rng = np.random.default_rng(seed)
    land = make_land_cover(shape, n_classes, rng)
    georef = land.georef
    codes = np.unique(land.classes)
    means = dict(zip(codes.tolist(), separated_means(len(codes), rng, min_gap=min_gap)))
    base = np.vectorize(means.get, otypes=[float])(land.classes)
    ramp = planar_gradient(shape, gradient, rng)
    target_index = n_scenes // 2 if target_index is None else target_index
    scenes, truth = [], {}
    for i in range(n_scenes):
        date = start + dt.timedelta(days=cycle_days * i)
        offsets = {c: rng.uniform(-drift, drift) for c in codes.tolist()}
        season = rng.uniform(-3.0, 3.0)
        shift = np.vectorize(offsets.get, otypes=[float])(land.classes)
        values = base + shift + season + ramp + rng.normal(0.0, noise, shape)
        theta = target_theta if i == target_index else ref_theta
        occluded = cloud_mask(shape, theta, rng)
        truth[date] = values
        scenes.append(Scene(date, LstGrid(georef, values), OcclusionMask(georef, occluded)))
    catalog = SceneCatalog(scenes, land, cycle_days, region="synthetic")
    return SyntheticCase(catalog, truth, start + dt.timedelta(days=cycle_days * target_index))


def write_dataset(
    outdir,
    seed: int = 0,
    shape=(96, 96),
    n_scenes: int = 5,
    thetas: Optional[Sequence[float]] = None,
    policy: QaPolicy = QaPolicy(),
    **kw,
) -> Path:
    """Write a synthetic case as GeoTIFFs plus a YAML manifest; return the manifest path.

    ``thetas`` sets each scene's cloud fraction (default: 0.02 for all but
    the middle scene at 0.2). QA words carry the cloud bit under clouds and
    the Collection-2 "clear" bit (6) elsewhere.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    case = make_case(seed, shape=shape, n_scenes=n_scenes, target_theta=0.0, ref_theta=0.0, **kw)
    rng = np.random.default_rng([seed, 1])
    if thetas is None:
        thetas = [0.2 if i == n_scenes // 2 else 0.02 for i in range(n_scenes)]
    write_grid(case.catalog.land, outdir / "landcover.tif")
    entries = []
    for scene, theta in zip(case.catalog.scenes, thetas):
        stem = scene.date.strftime("%Y%m%d")
        cloudy = cloud_mask(shape, theta, rng)
        qa = np.where(cloudy, 1 << policy.cloud, 1 << 6).astype(np.uint16)
        write_grid(scene.lst.replace(np.float32(scene.lst.values).astype(np.float64)), outdir / f"{stem}_lst.tif")
        write_grid(BitfieldGrid(scene.lst.georef, qa), outdir / f"{stem}_qa.tif")
        entries.append({"date": scene.date.isoformat(), "lst": f"{stem}_lst.tif", "qa": f"{stem}_qa.tif", "time": "16:45"})
    manifest = {
        "region": "synthetic",
        "land_cover": "landcover.tif",
        "revisit_days": case.catalog.cycle_days,
        "scenes": entries,
    }
    path = outdir / "manifest.yaml"
    path.write_text(yaml.safe_dump(manifest, sort_keys=False))
    return path
