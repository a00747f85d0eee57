"""Grid containers, alignment checks and GeoTIFF I/O.

All grids are immutable: constructors copy their input arrays and mark the
copies read-only, so no downstream operation can modify a caller's data.
Temperatures live in memory as float64 kelvin and are written to disk as
float32 with a nodata tag.
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import rasterio
from rasterio.crs import CRS
from rasterio.errors import RasterioIOError
from rasterio.transform import Affine

from .errors import GeoreferenceError, LstFillError, MisalignmentError

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

#: Plausible land-surface temperature range in kelvin.
LST_MIN_K = 150.0
LST_MAX_K = 400.0

#: Nodata tag written to float32 temperature files (never a plausible LST).
LST_NODATA = 0.0

#: Landsat Collection-2 Level-2 surface temperature band (ST_B10) DN scaling.
C2_ST_SCALE = 0.00341802
C2_ST_OFFSET = 149.0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridShape:
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.height}x{self.width}")

    @property
    def size(self) -> int:
        return self.height * self.width

    def as_tuple(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class GeoRef:
    """Georeferencing of a north-up grid.

    Parameters
    ----------
    origin : tuple of float
        Map coordinates (x, y) of the upper-left corner of pixel (0, 0).
    pixel_size : tuple of float
        Pixel size (dx, dy) in map units; dy is usually negative.
    crs_id : str
        Coordinate reference system, e.g. ``"EPSG:32615"``.
    """

    origin: tuple[float, float]
    pixel_size: tuple[float, float]
    crs_id: str

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "pixel_size", tuple(float(v) for v in self.pixel_size))
        if len(self.origin) != 2 or len(self.pixel_size) != 2:
            raise ValueError("origin and pixel_size must both be 2-tuples")
        if self.pixel_size[0] == 0 or self.pixel_size[1] == 0:
            raise ValueError("pixel_size components must be nonzero")
        if not self.crs_id:
            raise ValueError("crs_id must be a non-empty string")

    @property
    def transform(self) -> Affine:
        (x0, y0), (dx, dy) = self.origin, self.pixel_size
        return Affine(dx, 0.0, x0, 0.0, dy, y0)

    @classmethod
    def from_transform(cls, transform: Affine, crs) -> "GeoRef":
        if transform.b != 0 or transform.d != 0:
            raise GeoreferenceError("rotated geotransforms are not supported")
        return cls((transform.c, transform.f), (transform.a, transform.e), CRS.from_user_input(crs).to_string())

    def pixel_of(self, x: float, y: float) -> tuple[int, int]:
        """Return the (row, col) of the pixel containing map point (x, y)."""
        col = int(np.floor((x - self.origin[0]) / self.pixel_size[0]))
        row = int(np.floor((y - self.origin[1]) / self.pixel_size[1]))
        return row, col


class _Grid:
    georef: GeoRef

    @property
    def shape(self) -> GridShape:
        return GridShape(*self._array().shape)

    def _array(self) -> np.ndarray:  # pragma: no cover - overridden
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LstGrid(_Grid):
    """Surface temperature in kelvin with a per-pixel validity flag.

    Invalid pixels hold NaN in :attr:`values`; valid pixels must be finite and
    inside ``[LST_MIN_K, LST_MAX_K]``.
    """

    georef: GeoRef
    values: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"LST values must be 2-D, got shape {values.shape}")
        if self.valid is None:
            valid = np.isfinite(values)
        else:
            valid = np.asarray(self.valid, dtype=bool)
            if valid.shape != values.shape:
                raise ValueError("valid mask shape differs from values shape")
        v = values[valid]
        if v.size and (not np.all(np.isfinite(v)) or v.min() < LST_MIN_K or v.max() > LST_MAX_K):
            raise ValueError(
                f"valid LST pixels must be finite and within [{LST_MIN_K}, {LST_MAX_K}] K "
                f"(got range {np.nanmin(v):.3f}..{np.nanmax(v):.3f})"
            )
        values = np.where(valid, values, np.nan)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "valid", _frozen(valid))

    def _array(self):
        return self.values

    def replace(self, values: np.ndarray, valid: Optional[np.ndarray] = None) -> "LstGrid":
        return LstGrid(self.georef, values, valid)


@dataclass(frozen=True, eq=False)
class LandCoverGrid(_Grid):
    """Categorical land-cover codes; codes are opaque labels."""

    georef: GeoRef
    classes: np.ndarray
    legend: Optional[Mapping[int, str]] = None

    def __post_init__(self):
        classes = np.asarray(self.classes)
        if classes.ndim != 2:
            raise ValueError("land-cover grid must be 2-D")
        if not np.issubdtype(classes.dtype, np.integer):
            raise ValueError("land-cover codes must be integers")
        if classes.size and classes.min() < 0:
            raise ValueError("land-cover codes must be non-negative")
        object.__setattr__(self, "classes", _frozen(classes.astype(np.int32)))
        if self.legend is not None:
            object.__setattr__(self, "legend", dict(self.legend))

    def _array(self):
        return self.classes

    def codes(self) -> np.ndarray:
        return np.unique(self.classes)

    @cached_property
    def fingerprint(self) -> str:
        """Content digest, used as a cache key for derived products."""
        h = hashlib.sha1(repr(self.classes.shape).encode())
        h.update(np.ascontiguousarray(self.classes).tobytes())
        return h.hexdigest()

    def name_of(self, code: int) -> str:
        if self.legend and int(code) in self.legend:
            return self.legend[int(code)]
        return str(int(code))

    @classmethod
    def constant_like(cls, other: _Grid, code: int = 1) -> "LandCoverGrid":
        """Single-class grid aligned with ``other``."""
        h, w = other.shape.as_tuple()
        return cls(other.georef, np.full((h, w), code, dtype=np.int32), {code: "all"})


@dataclass(frozen=True, eq=False)
class BitfieldGrid(_Grid):
    """Raw per-pixel quality words (e.g. Landsat QA_PIXEL)."""

    georef: GeoRef
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or not np.issubdtype(bits.dtype, np.unsignedinteger):
            raise ValueError("bitfield grid must be a 2-D unsigned integer array")
        object.__setattr__(self, "bits", _frozen(bits))

    def _array(self):
        return self.bits


def check_aligned(grids: Sequence, names: Optional[Sequence[str]] = None) -> None:
    """Raise :class:`MisalignmentError` unless every grid shares shape and GeoRef."""
    if len(grids) < 2:
        raise ValueError("check_aligned needs at least two grids")
    names = list(names) if names is not None else [f"grid[{i}]" for i in range(len(grids))]
    ref = grids[0]
    for name, g in zip(names[1:], grids[1:]):
        if g.shape != ref.shape:
            raise MisalignmentError(
                f"{name} has shape {g.shape.as_tuple()}, expected {ref.shape.as_tuple()} (as {names[0]})"
            )
        if g.georef != ref.georef:
            raise MisalignmentError(f"{name} georeferencing {g.georef} differs from {names[0]} {ref.georef}")


def _open(path: PathLike):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"raster not found: {path}")
    try:
        return rasterio.open(path)
    except RasterioIOError as exc:
        raise LstFillError(f"cannot read raster {path}: {exc}") from exc


def read_grid(
    path: PathLike,
    band: int = 1,
    kind: str = "lst",
    dn_scale: Optional[float] = None,
    dn_offset: Optional[float] = None,
    legend: Optional[Mapping[int, str]] = None,
):
    """Read one band of a GeoTIFF.

    Parameters
    ----------
    path : path-like
        GeoTIFF file.
    band : int
        1-based band index.
    kind : {"lst", "landcover", "bitfield"}
        Which grid type to build.
    dn_scale, dn_offset : float, optional
        Affine DN-to-kelvin conversion for ``kind="lst"``. Integer bands
        default to the Collection-2 Level-2 constants; float bands are taken
        as kelvin unless a scale is given.

    Returns
    -------
    LstGrid, LandCoverGrid or BitfieldGrid
    """
    with _open(path) as src:
        if src.crs is None or src.transform == Affine.identity():
            raise GeoreferenceError(f"{path} has no georeferencing")
        if not 1 <= band <= src.count:
            raise ValueError(f"{path} has {src.count} band(s); band {band} requested")
        georef = GeoRef.from_transform(src.transform, src.crs)
        arr = src.read(band)
        nodata = src.nodata

    if kind == "landcover":
        return LandCoverGrid(georef, arr.astype(np.int32), legend)
    if kind == "bitfield":
        if not np.issubdtype(arr.dtype, np.unsignedinteger):
            arr = arr.astype(np.uint16)
        return BitfieldGrid(georef, arr)
    if kind != "lst":
        raise ValueError(f"unknown grid kind {kind!r}")

    if nodata is None:
        fill = np.zeros(arr.shape, dtype=bool)
    elif np.isnan(nodata):
        fill = np.isnan(arr)
    else:
        fill = arr == nodata
    if np.issubdtype(arr.dtype, np.integer):
        scale = C2_ST_SCALE if dn_scale is None else dn_scale
        offset = C2_ST_OFFSET if dn_offset is None else dn_offset
        kelvin = arr.astype(np.float64) * scale + offset
    else:
        kelvin = arr.astype(np.float64)
        if dn_scale is not None:
            kelvin = kelvin * dn_scale + (dn_offset or 0.0)
    with np.errstate(invalid="ignore"):
        plausible = np.isfinite(kelvin) & (kelvin >= LST_MIN_K) & (kelvin <= LST_MAX_K)
    implausible = ~fill & ~plausible
    if implausible.any():
        logger.warning("%s: %d pixel(s) outside [%g, %g] K marked invalid",
                       path, int(implausible.sum()), LST_MIN_K, LST_MAX_K)
    return LstGrid(georef, kelvin, ~fill & plausible)


def write_array(path: PathLike, array: np.ndarray, georef: GeoRef, nodata=None) -> None:
    """Write a single 2-D array as a one-band GeoTIFF, dtype preserved."""
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {path.parent}")
    array = np.asarray(array)
    profile = dict(
        driver="GTiff",
        height=array.shape[0],
        width=array.shape[1],
        count=1,
        dtype=array.dtype,
        crs=CRS.from_user_input(georef.crs_id),
        transform=georef.transform,
        nodata=nodata,
    )
    with rasterio.open(path, "w", **profile) as dst:
        dst.write(array, 1)


def write_grid(grid, path: PathLike) -> None:
    """Write any package grid type to GeoTIFF.

    Temperatures become float32 with nodata ``LST_NODATA``; land cover,
    occlusion masks (``{0, 1}``) are written as 8-bit when the codes fit,
    and bitfields keep their unsigned integer width.
    """
    if isinstance(grid, LstGrid):
        out = np.where(grid.valid, grid.values, LST_NODATA).astype(np.float32)
        write_array(path, out, grid.georef, nodata=LST_NODATA)
    elif isinstance(grid, LandCoverGrid):
        dtype = np.uint8 if grid.classes.max(initial=0) <= 255 else np.uint16
        write_array(path, grid.classes.astype(dtype), grid.georef)
    elif isinstance(grid, BitfieldGrid):
        write_array(path, grid.bits, grid.georef)
    elif hasattr(grid, "occluded"):
        write_array(path, grid.occluded.astype(np.uint8), grid.georef)
    else:
        raise TypeError(f"cannot write object of type {type(grid).__name__}")


NLCD_LEGEND = {
    11: "Open Water",
    12: "Perennial Ice/Snow",
    21: "Developed, Open Space",
    22: "Developed, Low Intensity",
    23: "Developed, Medium Intensity",
    24: "Developed, High Intensity",
    31: "Barren Land",
    41: "Deciduous Forest",
    42: "Evergreen Forest",
    43: "Mixed Forest",
    51: "Dwarf Scrub",
    52: "Shrub/Scrub",
    71: "Grassland/Herbaceous",
    72: "Sedge/Herbaceous",
    73: "Lichens",
    74: "Moss",
    81: "Pasture/Hay",
    82: "Cultivated Crops",
    90: "Woody Wetlands",
    95: "Emergent Herbaceous Wetlands",
}
