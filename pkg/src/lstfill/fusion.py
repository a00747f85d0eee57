"""Fusion of the spatial and temporal predictions and the ablation modes."""

from __future__ import annotations

import datetime as dt
import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import FullyOccludedError, NoReferencesError, ServiceabilityError
from .raster import LandCoverGrid, LstGrid, check_aligned
from .spatial import SpatialParams, spatial_prediction
from .temporal import SceneCatalog, TemporalParams, temporal_prediction

logger = logging.getLogger(__name__)

#: Scenes at or above this occlusion factor are refused.
SERVICEABILITY_BOUND = 0.99


class ReconstructionMode(enum.Enum):
    M1 = "m1"  # spatial + temporal, weighted by occlusion
    M2 = "m2"  # spatial channel only
    M3 = "m3"  # temporal channel only
    M4 = "m4"  # M1 with land cover collapsed to one class
    M5 = "m5"  # occluded pixels <- mean of all clear pixels

    @classmethod
    def parse(cls, text: str) -> "ReconstructionMode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown mode {text!r}; expected one of m1..m5") from None

    @property
    def label(self) -> str:
        return self.name


class Provenance(enum.IntEnum):
    OBSERVED = 0
    SPATIAL = 1
    TEMPORAL = 2
    FUSED = 3
    FALLBACK = 4


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    output: LstGrid
    theta: float
    mode: ReconstructionMode
    references_used: List[dt.date]
    provenance: np.ndarray
    warnings: List[str] = field(default_factory=list)


def fuse(spatial: LstGrid, temporal: LstGrid, theta: float) -> LstGrid:
    """Per-pixel ``(1 - theta) * spatial + theta * temporal``."""
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    check_aligned([spatial, temporal], ["spatial", "temporal"])
    w = 1.0 - theta
    return spatial.replace(w * spatial.values + theta * temporal.values, spatial.valid & temporal.valid)


def reconstruct(
    catalog: SceneCatalog,
    target_date: dt.date,
    mode: ReconstructionMode = ReconstructionMode.M1,
    s_params: SpatialParams = SpatialParams(),
    t_params: TemporalParams = TemporalParams(),
    land: Optional[LandCoverGrid] = None,
    cache: Optional[dict] = None,
    absolute_shift: bool = False,
) -> ReconstructionResult:
    """Fill every occluded pixel of the scene on ``target_date``.

    Clear pixels are copied from the input in every mode. M1 falls back to
    the spatial channel alone (with a warning) when no reference scene is
    admissible; M3 raises :class:`NoReferencesError` in that case.
    """
    target = catalog.scene_on(target_date)
    theta = target.theta
    if theta >= SERVICEABILITY_BOUND:
        raise ServiceabilityError(
            f"{target_date}: occlusion factor {theta:.4f} exceeds serviceability bound {SERVICEABILITY_BOUND}"
        )
    land = catalog.land if land is None else land
    if mode is ReconstructionMode.M4:
        land = LandCoverGrid.constant_like(land)
    clear = target.clear
    obs = target.lst.values
    prov = np.where(clear, Provenance.OBSERVED, Provenance.SPATIAL).astype(np.uint8)
    warnings: List[str] = []
    refs: List[dt.date] = []

    if mode is ReconstructionMode.M5:
        if not clear.any():
            raise FullyOccludedError()
        out = np.where(clear, obs, obs[clear].mean(dtype=np.float64))
        prov[~clear] = Provenance.FALLBACK
    elif mode is ReconstructionMode.M3:
        out, ref_scenes = temporal_prediction(catalog, target, land, t_params, s_params, absolute_shift, cache)
        refs = [s.date for s in ref_scenes]
        prov[~clear] = Provenance.TEMPORAL
    else:
        sp, fell_back = spatial_prediction(target, land, s_params)
        out = sp
        if mode is not ReconstructionMode.M2:
            try:
                tp, ref_scenes = temporal_prediction(catalog, target, land, t_params, s_params, absolute_shift, cache)
            except NoReferencesError:
                msg = f"{target_date}: no admissible reference frames; using spatial channel only"
                logger.warning(msg)
                warnings.append(msg)
            else:
                refs = [s.date for s in ref_scenes]
                out = (1.0 - theta) * sp + theta * tp
                prov[~clear] = Provenance.FUSED
        prov[fell_back & ~clear] = Provenance.FALLBACK

    out = np.where(clear, obs, out)
    output = target.lst.replace(out, np.ones(out.shape, dtype=bool))
    prov.setflags(write=False)
    return ReconstructionResult(output, theta, mode, refs, prov, warnings)
