"""Reference-scene gap filling.

A target scene is predicted from up to ``n`` clean scenes acquired near the
same time of year. Each reference is first completed by the spatial channel,
then shifted per land-cover class so its class means match the target's clear
pixels, and the shifted references are averaged.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Union

import numpy as np

from .errors import NoReferencesError
from .raster import LandCoverGrid, LstGrid, check_aligned
from .scene import Scene
from .spatial import SpatialParams, spatial_prediction

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SceneCatalog:
    """Time-ordered scenes over one region sharing one land-cover grid.

    Scenes may be given in any order; they are stored sorted by date.
    """

    scenes: Sequence[Scene]
    land: LandCoverGrid
    cycle_days: int = 16
    region: str = "region"

    def __post_init__(self):
        scenes = tuple(sorted(self.scenes, key=lambda s: s.date))
        for a, b in zip(scenes, scenes[1:]):
            if a.date == b.date:
                raise ValueError(f"duplicate scene date {a.date}")
        if self.cycle_days < 1:
            raise ValueError("cycle_days must be positive")
        for s in scenes:
            check_aligned([self.land, s.lst], ["land cover", f"scene {s.date}"])
        object.__setattr__(self, "scenes", scenes)

    def __len__(self):
        return len(self.scenes)

    def __iter__(self):
        return iter(self.scenes)

    @property
    def dates(self) -> List[dt.date]:
        return [s.date for s in self.scenes]

    def scene_on(self, date: dt.date) -> Scene:
        for s in self.scenes:
            if s.date == date:
                return s
        available = ", ".join(d.isoformat() for d in self.dates)
        raise LookupError(f"no scene on {date}; available dates: {available}")

    def replace(self, scene: Scene) -> "SceneCatalog":
        """Catalog with the scene of the same date swapped for ``scene``."""
        self.scene_on(scene.date)
        rest = [s for s in self.scenes if s.date != scene.date]
        return SceneCatalog(rest + [scene], self.land, self.cycle_days, self.region)


@dataclass(frozen=True)
class TemporalParams:
    """Reference count ``n``, seasonal bracket ``delta`` (cycles), cleanliness cap ``theta_max``."""

    n: int = 3
    delta: int = 2
    theta_max: float = 0.1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not 0 <= self.theta_max < 1:
            raise ValueError("theta_max must lie in [0, 1)")


@dataclass(frozen=True)
class ClassShift:
    """Per-class additive adjustment (kelvin) bringing a reference onto the target."""

    shifts: Dict[int, float]
    counts: Dict[int, int]
    unmatched: FrozenSet[int] = field(default_factory=frozenset)

    def as_array(self, classes: np.ndarray) -> np.ndarray:
        codes = np.array(sorted(self.shifts), dtype=classes.dtype)
        vals = np.array([self.shifts[int(c)] for c in codes], dtype=np.float64)
        idx = np.searchsorted(codes, classes)
        return vals[idx]


def day_of_year(d: dt.date) -> int:
    return min(d.timetuple().tm_yday, 365)


def seasonal_distance(a: dt.date, b: dt.date) -> int:
    """Day-of-year separation with wraparound across the year boundary."""
    d = abs(day_of_year(a) - day_of_year(b))
    return min(d, 365 - d)


def candidate_references(catalog: SceneCatalog, target: Scene, params: TemporalParams) -> List[Scene]:
    window = params.delta * catalog.cycle_days
    return [
        s
        for s in catalog.scenes
        if s.date != target.date and s.theta < params.theta_max and seasonal_distance(s.date, target.date) <= window
    ]


def select_references(catalog: SceneCatalog, target: Scene, params: TemporalParams = TemporalParams()) -> List[Scene]:
    """Up to ``n`` admissible references, nearest in calendar time first.

    Ties in time distance go to the earlier acquisition.
    """
    cands = candidate_references(catalog, target, params)
    if not cands:
        raise NoReferencesError()
    cands.sort(key=lambda s: (abs((s.date - target.date).days), s.date))
    return cands[: params.n]


def class_shift(
    target: Scene,
    reference: Union[LstGrid, Scene],
    land: LandCoverGrid,
    absolute: bool = False,
) -> ClassShift:
    """Signed mean (target - reference) per class over target-clear pixels.

    ``reference`` must already be spatially complete. ``absolute=True`` uses
    the mean absolute difference instead; it is kept only for comparison
    because it cannot express a negative adjustment.
    """
    ref = reference.lst if isinstance(reference, Scene) else reference
    check_aligned([target.lst, ref, land], ["target", "reference", "land cover"])
    codes, inverse = np.unique(land.classes, return_inverse=True)
    inverse = inverse.reshape(land.classes.shape)
    usable = target.clear & np.isfinite(ref.values)
    diff = target.lst.values[usable] - ref.values[usable]
    if absolute:
        diff = np.abs(diff)
    sums = np.bincount(inverse[usable], weights=diff, minlength=codes.size)
    counts = np.bincount(inverse[usable], minlength=codes.size)
    shifts, ns, unmatched = {}, {}, set()
    for c, s, n in zip(codes, sums, counts):
        ns[int(c)] = int(n)
        if n:
            shifts[int(c)] = float(s / n)
        else:
            shifts[int(c)] = 0.0
            unmatched.add(int(c))
    return ClassShift(shifts, ns, frozenset(unmatched))


def _completed(scene: Scene, land: LandCoverGrid, s_params: SpatialParams, cache: Optional[dict]) -> np.ndarray:
    if cache is None:
        return spatial_prediction(scene, land, s_params)[0]
    key = (scene.date, land.fingerprint, s_params)
    hit = cache.get(key)
    if hit is None:
        hit = spatial_prediction(scene, land, s_params)[0]
        hit.setflags(write=False)
        cache[key] = hit
    return hit


def temporal_prediction(
    catalog: SceneCatalog,
    target: Scene,
    land: Optional[LandCoverGrid] = None,
    t_params: TemporalParams = TemporalParams(),
    s_params: SpatialParams = SpatialParams(),
    absolute_shift: bool = False,
    cache: Optional[dict] = None,
):
    """Return ``(values, references)`` for the temporal channel.

    ``cache`` may be a dict shared across calls to reuse spatially completed
    references; keys include the land-cover fingerprint and spatial params.
    """
    land = catalog.land if land is None else land
    refs = select_references(catalog, target, t_params)
    acc = np.zeros(target.shape.as_tuple(), dtype=np.float64)
    for ref in refs:
        completed = _completed(ref, land, s_params, cache)
        shift = class_shift(target, target.lst.replace(completed), land, absolute=absolute_shift)
        if shift.unmatched:
            logger.debug("%s vs %s: no target-clear pixels for classes %s, shift 0",
                         target.date, ref.date, sorted(shift.unmatched))
        acc += completed + shift.as_array(land.classes)
    out = acc / len(refs)
    clear = target.clear
    out[clear] = target.lst.values[clear]
    return out, refs


def temporal_channel(
    catalog: SceneCatalog,
    target: Scene,
    land: Optional[LandCoverGrid] = None,
    t_params: TemporalParams = TemporalParams(),
    s_params: SpatialParams = SpatialParams(),
    absolute_shift: bool = False,
) -> LstGrid:
    """Average of class-shifted, spatially completed reference scenes."""
    values, _ = temporal_prediction(catalog, target, land, t_params, s_params, absolute_shift)
    return target.lst.replace(values, np.ones(values.shape, dtype=bool))
