"""Occlusion masks decoded from per-pixel quality bitfields."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .raster import BitfieldGrid, GeoRef, _frozen, _Grid


@dataclass(frozen=True)
class QaPolicy:
    """Which QA bits count as contamination.

    Defaults follow the Landsat Collection-2 ``QA_PIXEL`` layout. Cloud,
    cloud shadow and cirrus are always contamination; dilated cloud is
    opt-in.
    """

    cloud: int = 3
    cloud_shadow: int = 4
    cirrus: int = 2
    dilated_cloud: int = 1
    fill: int = 0
    use_dilated_cloud: bool = False
    width: int = 16

    def __post_init__(self):
        roles = [self.cloud, self.cloud_shadow, self.cirrus, self.dilated_cloud, self.fill]
        if len(set(roles)) != len(roles):
            raise ValueError(f"QA bit indices must be distinct, got {roles}")
        for b in roles:
            if not 0 <= b < self.width:
                raise ValueError(f"QA bit index {b} outside bitfield width {self.width}")

    @property
    def contamination_bits(self) -> tuple[int, ...]:
        bits = (self.cloud, self.cloud_shadow, self.cirrus)
        return bits + (self.dilated_cloud,) if self.use_dilated_cloud else bits

    @property
    def contamination_word(self) -> int:
        word = 0
        for b in self.contamination_bits:
            word |= 1 << b
        return word


@dataclass(frozen=True, eq=False)
class OcclusionMask(_Grid):
    """Boolean contamination mask (True = occluded).

    ``fill`` optionally flags pixels outside the acquisition footprint; it is
    only consulted when the occlusion factor is computed with
    ``crop_to_valid``.
    """

    georef: GeoRef
    occluded: np.ndarray
    fill: Optional[np.ndarray] = None

    def __post_init__(self):
        occ = np.asarray(self.occluded, dtype=bool)
        if occ.ndim != 2:
            raise ValueError("occlusion mask must be 2-D")
        fill = np.zeros_like(occ) if self.fill is None else np.asarray(self.fill, dtype=bool)
        if fill.shape != occ.shape:
            raise ValueError("fill flags must match the mask shape")
        object.__setattr__(self, "occluded", _frozen(occ))
        object.__setattr__(self, "fill", _frozen(fill))

    def _array(self):
        return self.occluded

    @property
    def clear(self) -> np.ndarray:
        return ~self.occluded


def decode_qa(qa: BitfieldGrid, policy: QaPolicy = QaPolicy()) -> OcclusionMask:
    """A pixel is occluded iff any of the policy's contamination bits is set."""
    bits = qa.bits.astype(np.uint64)
    occluded = (bits & np.uint64(policy.contamination_word)) != 0
    fill = (bits >> np.uint64(policy.fill)) & np.uint64(1) == 1
    return OcclusionMask(qa.georef, occluded, fill)


def occlusion_factor(mask: OcclusionMask, crop_to_valid: bool = False) -> float:
    """Fraction of occluded pixels.

    The default denominator is every pixel of the grid. With ``crop_to_valid``
    fill pixels are dropped from both numerator and denominator.
    """
    if not crop_to_valid:
        return int(np.count_nonzero(mask.occluded)) / mask.occluded.size
    inside = ~mask.fill
    n = int(np.count_nonzero(inside))
    if n == 0:
        return 1.0
    return int(np.count_nonzero(mask.occluded & inside)) / n
