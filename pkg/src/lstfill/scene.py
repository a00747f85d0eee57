"""A single acquisition: temperature grid, occlusion mask and occlusion factor."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .qa import OcclusionMask, occlusion_factor
from .raster import LstGrid, check_aligned


@dataclass(frozen=True, eq=False)
class Scene:
    """One dated LST acquisition.

    Pixels that are invalid in ``lst`` are merged into the stored mask, so
    ``mask.occluded`` is the full set of pixels that need reconstruction and
    ``theta`` is always recomputable from ``mask``.
    """

    date: dt.date
    lst: LstGrid
    mask: OcclusionMask
    time: Optional[dt.time] = None
    crop_to_valid: bool = False
    theta: float = field(init=False)

    def __post_init__(self):
        check_aligned([self.lst, self.mask], ["lst", "mask"])
        # no-data and fill pixels are never usable as clear
        unusable = ~self.lst.valid | self.mask.fill
        if (unusable & ~self.mask.occluded).any():
            merged = OcclusionMask(self.mask.georef, self.mask.occluded | unusable, self.mask.fill)
            object.__setattr__(self, "mask", merged)
        object.__setattr__(self, "theta", occlusion_factor(self.mask, self.crop_to_valid))

    @property
    def shape(self):
        return self.lst.shape

    @property
    def occluded(self) -> np.ndarray:
        return self.mask.occluded

    @property
    def clear(self) -> np.ndarray:
        return ~self.mask.occluded

    @property
    def acquired(self) -> Optional[dt.datetime]:
        if self.time is None:
            return None
        return dt.datetime.combine(self.date, self.time)

    def with_data(self, lst: LstGrid, mask: OcclusionMask) -> "Scene":
        return Scene(self.date, lst, mask, self.time, self.crop_to_valid)

    @classmethod
    def from_arrays(cls, date, georef, values, occluded, **kw) -> "Scene":
        """Convenience constructor from plain arrays sharing one GeoRef."""
        lst = LstGrid(georef, values)
        return cls(date, lst, OcclusionMask(georef, occluded), **kw)
