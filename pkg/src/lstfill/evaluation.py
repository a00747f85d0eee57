"""Simulation scoring, ablation tables and in-situ validation."""

from __future__ import annotations

import csv
import datetime as dt
import io
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyMaskError, LstFillError, PlacementError
from .fusion import SERVICEABILITY_BOUND, ReconstructionMode, reconstruct
from .qa import OcclusionMask
from .raster import LstGrid, check_aligned
from .scene import Scene
from .spatial import SpatialParams
from .temporal import SceneCatalog, TemporalParams

logger = logging.getLogger(__name__)

#: Stefan-Boltzmann constant (CODATA 2018), W m^-2 K^-4.
STEFAN_BOLTZMANN = 5.670374419e-8

#: Spectral-to-broadband regression for ASTER bands 10..14.
BROADBAND_INTERCEPT = 0.128
BROADBAND_COEFS = (0.014, 0.145, 0.241, 0.467, 0.004)

PLACEMENT_RETRIES = 1000


@dataclass(frozen=True)
class OcclusionSpec:
    """Up to ``n`` artificial ``s x s`` squares, placed with RNG ``seed``."""

    s: int
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.s < 1 or self.n < 1:
            raise ValueError("occlusion size s and count n must be >= 1")


@dataclass
class EvalReport:
    mae: float
    rmse: float
    bias: float
    n_pixels: int
    mode: str = ""
    s: Optional[int] = None
    n: Optional[int] = None
    squares: Optional[int] = None
    date: Optional[dt.date] = None
    theta: Optional[float] = None
    region: str = ""


def simulate_occlusion(scene: Scene, spec: OcclusionSpec, rng=None) -> Tuple[Scene, np.ndarray]:
    """Add artificial square occlusions that never overlap existing ones.

    The number of squares is drawn uniformly from ``1..spec.n``. Each square's
    upper-left corner is drawn uniformly; placements touching real occlusion
    or an earlier square are rejected, up to ``PLACEMENT_RETRIES`` tries per
    square. Pixels inside squares lose their temperature (set to nodata) and
    are flagged occluded.

    Returns
    -------
    (Scene, ndarray)
        The augmented scene and the boolean mask of artificial pixels.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    h, w = scene.shape.as_tuple()
    s = spec.s
    if s > h or s > w:
        raise PlacementError(f"square size {s} exceeds grid {h}x{w}")
    wanted = int(rng.integers(1, spec.n + 1))
    taken = scene.occluded.copy()
    artificial = np.zeros_like(taken)
    placed = 0
    for _ in range(wanted):
        for _ in range(PLACEMENT_RETRIES):
            r, c = int(rng.integers(0, h - s + 1)), int(rng.integers(0, w - s + 1))
            if not taken[r : r + s, c : c + s].any():
                taken[r : r + s, c : c + s] = True
                artificial[r : r + s, c : c + s] = True
                placed += 1
                break
        else:
            logger.warning("%s: placed %d of %d squares (no free %dx%d area found)",
                           scene.date, placed, wanted, s, s)
            break
    if placed == 0:
        raise PlacementError(f"{scene.date}: no {s}x{s} clear area for an artificial occlusion")
    lst = scene.lst.replace(scene.lst.values, scene.lst.valid & ~artificial)
    mask = OcclusionMask(scene.mask.georef, scene.mask.occluded | artificial, scene.mask.fill)
    return scene.with_data(lst, mask), artificial


def score(reconstructed: LstGrid, truth: LstGrid, artificial: np.ndarray, **meta) -> EvalReport:
    """MAE, RMSE and bias of ``reconstructed - truth`` over ``artificial`` pixels only."""
    check_aligned([reconstructed, truth], ["reconstructed", "truth"])
    sel = np.asarray(artificial, dtype=bool)
    if not sel.any():
        raise EmptyMaskError("no artificially occluded pixels to score")
    err = reconstructed.values[sel] - truth.values[sel]
    if not np.all(np.isfinite(err)):
        raise LstFillError("non-finite reconstruction or truth inside the scored area")
    return EvalReport(
        mae=float(np.mean(np.abs(err))),
        rmse=float(np.sqrt(np.mean(err * err))),
        bias=float(np.mean(err)),
        n_pixels=int(sel.sum()),
        **meta,
    )


@dataclass
class AblationTable:
    reports: List[EvalReport] = field(default_factory=list)
    failures: List[Tuple[dt.date, str, str]] = field(default_factory=list)

    def summary(self) -> List[EvalReport]:
        """Pixel-pooled metrics per mode across all scored scenes."""
        out = []
        modes = sorted({r.mode for r in self.reports})
        for mode in modes:
            rows = [r for r in self.reports if r.mode == mode]
            n = sum(r.n_pixels for r in rows)
            mae = sum(r.mae * r.n_pixels for r in rows) / n
            mse = sum(r.rmse**2 * r.n_pixels for r in rows) / n
            bias = sum(r.bias * r.n_pixels for r in rows) / n
            first = rows[0]
            out.append(EvalReport(mae, math.sqrt(mse), bias, n, mode, first.s, first.n, region=first.region))
        return out

    def to_csv(self, path=None) -> str:
        fields = ["region", "date", "s", "n", "squares", "theta", "mode", "mae", "rmse", "bias", "n_pixels"]
        buf = io.StringIO()
        wr = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        wr.writeheader()
        for r in sorted(self.reports, key=lambda r: (r.date, r.mode)):
            row = {k: v for k, v in asdict(r).items() if k in fields}
            row["date"] = r.date.isoformat() if r.date else ""
            for k in ("mae", "rmse", "bias", "theta"):
                row[k] = "" if row[k] is None else f"{row[k]:.6f}"
            wr.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def format_table(self) -> str:
        """Ablation summary text: one line per region/s/n with MAE and RMSE per mode."""
        summ = {r.mode: r for r in self.summary()}
        modes = [m.label for m in ReconstructionMode if m.label in summ]
        if not modes:
            return "(no scored scenes)"
        first = next(iter(summ.values()))
        head = f"{'region':<14}{'s':>5}{'n':>4} | " + " ".join(f"{'MAE ' + m:>8}" for m in modes)
        head += " | " + " ".join(f"{'RMSE ' + m:>8}" for m in modes)
        line = f"{first.region:<14}{first.s or '':>5}{first.n or '':>4} | "
        line += " ".join(f"{summ[m].mae:>8.2f}" for m in modes) + " | "
        line += " ".join(f"{summ[m].rmse:>8.2f}" for m in modes)
        return head + "\n" + line


def _scene_seed(seed: int, date: dt.date) -> np.random.Generator:
    return np.random.default_rng([seed, date.toordinal()])


def ablation_suite(
    catalog: SceneCatalog,
    spec: OcclusionSpec,
    modes: Sequence[ReconstructionMode] = tuple(ReconstructionMode),
    s_params: SpatialParams = SpatialParams(),
    t_params: TemporalParams = TemporalParams(),
    dates: Optional[Iterable[dt.date]] = None,
) -> AblationTable:
    """Simulate, reconstruct and score every scene under every mode.

    Each scene gets one artificial occlusion pattern (seeded from
    ``spec.seed`` and the scene date) shared by all modes. Failures are
    recorded per scene and mode and the suite continues.
    """
    table = AblationTable()
    cache: dict = {}
    for date in sorted(dates) if dates is not None else catalog.dates:
        scene = catalog.scene_on(date)
        try:
            augmented, artificial = simulate_occlusion(scene, spec, _scene_seed(spec.seed, date))
        except LstFillError as exc:
            table.failures.append((date, "*", str(exc)))
            continue
        trial = catalog.replace(augmented)
        squares = int(artificial.sum()) // (spec.s * spec.s)
        for mode in modes:
            try:
                res = reconstruct(trial, date, mode, s_params, t_params, cache=cache)
            except LstFillError as exc:
                table.failures.append((date, mode.label, str(exc)))
                continue
            table.reports.append(
                score(res.output, scene.lst, artificial, mode=mode.label, s=spec.s, n=spec.n,
                      squares=squares, date=date, theta=augmented.theta, region=catalog.region)
            )
    return table


# -- in-situ -------------------------------------------------------------------


@dataclass(frozen=True)
class StationRecord:
    timestamp: dt.datetime
    f_up: float
    f_down: float
    emissivity: float
    lat: Optional[float] = None
    lon: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.emissivity <= 1:
            raise ValueError(f"broadband emissivity must lie in (0, 1], got {self.emissivity}")


def broadband_emissivity(e10, e11, e12, e13, e14):
    """Broadband longwave emissivity from ASTER narrowband emissivities (bands 10-14)."""
    out = _broadband(e10, e11, e12, e13, e14)
    return float(out) if np.ndim(out) == 0 else out


@np.vectorize
def _broadband(*eps):
    # fsum keeps the all-ones case at exactly the coefficient sum
    return math.fsum([BROADBAND_INTERCEPT, *(c * e for c, e in zip(BROADBAND_COEFS, eps))])


def upwelling_flux(t_s, emissivity, f_down):
    """Forward model: emitted plus reflected longwave flux for skin temperature ``t_s``."""
    return (1.0 - emissivity) * f_down + emissivity * STEFAN_BOLTZMANN * t_s**4


def insitu_lst(record: StationRecord) -> float:
    """Skin temperature (K) from up/down longwave flux.

    Raises ``ValueError`` when the reflected term exceeds the upwelling flux.
    """
    eps = record.emissivity
    radicand = (record.f_up - (1.0 - eps) * record.f_down) / (eps * STEFAN_BOLTZMANN)
    if not radicand > 0:
        raise ValueError(f"{record.timestamp}: non-positive emitted flux, cannot invert")
    return radicand**0.25


def read_station_records(path, emissivity: float, lat=None, lon=None) -> List[StationRecord]:
    """Parse a ``timestamp,f_up,f_down`` CSV (ISO-8601 UTC timestamps, header row)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if not row or not row.get("timestamp"):
                continue
            ts = dt.datetime.fromisoformat(row["timestamp"].strip().replace("Z", ""))
            out.append(StationRecord(ts, float(row["f_up"]), float(row["f_down"]), emissivity, lat, lon))
    return out


@dataclass(frozen=True)
class InsituParams:
    """Matching options.

    ``window_minutes`` bounds the station/overpass time difference.
    ``footprint`` is the side of the pixel window averaged around the
    station (1 = the containing pixel only). When a scene has no
    acquisition time the overpass is approximated as 10:11 local solar
    time at the station longitude.
    """

    window_minutes: float = 10.0
    footprint: int = 1
    mode: ReconstructionMode = ReconstructionMode.M1

    def __post_init__(self):
        if self.footprint < 1 or self.footprint % 2 == 0:
            raise ValueError("footprint must be an odd positive integer")


@dataclass
class InsituPair:
    date: dt.date
    sky: str
    landsat: float
    insitu: float
    minutes_apart: float


@dataclass
class InsituResult:
    pairs: List[InsituPair] = field(default_factory=list)
    skipped: List[Tuple[dt.date, str]] = field(default_factory=list)
    bad_records: int = 0

    def stats(self, sky: str) -> dict:
        d = np.array([p.landsat - p.insitu for p in self.pairs if p.sky == sky])
        if d.size == 0:
            return {"sky": sky, "n": 0, "rmse": None, "bias": None}
        return {"sky": sky, "n": int(d.size), "rmse": float(np.sqrt(np.mean(d * d))), "bias": float(d.mean())}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["date", "sky", "landsat_k", "insitu_k", "minutes_apart"])
        for p in self.pairs:
            wr.writerow([p.date.isoformat(), p.sky, f"{p.landsat:.4f}", f"{p.insitu:.4f}", f"{p.minutes_apart:.2f}"])
        return buf.getvalue()


def default_overpass(date: dt.date, lon: Optional[float]) -> dt.datetime:
    """Approximate Landsat 8 overpass in UTC from the mean local solar crossing time."""
    local_hours = 10.0 + 11.0 / 60.0
    utc_hours = local_hours - (lon or 0.0) / 15.0
    return dt.datetime.combine(date, dt.time()) + dt.timedelta(hours=utc_hours)


def insitu_validate(
    catalog: SceneCatalog,
    records: Sequence[StationRecord],
    pixel: Tuple[int, int],
    params: InsituParams = InsituParams(),
    s_params: SpatialParams = SpatialParams(),
    t_params: TemporalParams = TemporalParams(),
) -> InsituResult:
    """Pair satellite pixel values with time-matched station skin temperatures.

    A scene is *clear-sky* when the station pixel is not occluded; then the
    observed value is compared. Otherwise it is *cloudy-sky* and the
    reconstructed value is compared. Scenes above the serviceability bound
    are skipped.
    """
    row, col = pixel
    h, w = catalog.land.shape.as_tuple()
    if not (0 <= row < h and 0 <= col < w):
        raise ValueError(f"station pixel {pixel} outside {h}x{w} grid")
    result = InsituResult()
    temps = []
    for rec in records:
        try:
            temps.append((rec.timestamp, insitu_lst(rec)))
        except ValueError as exc:
            logger.warning("%s", exc)
            result.bad_records += 1
    if not temps:
        return result
    times = np.array([t for t, _ in temps], dtype="datetime64[s]")
    lon = next((r.lon for r in records if r.lon is not None), None)
    k = params.footprint // 2
    r0, r1, c0, c1 = max(row - k, 0), min(row + k + 1, h), max(col - k, 0), min(col + k + 1, w)
    cache: dict = {}
    for scene in catalog.scenes:
        when = scene.acquired or default_overpass(scene.date, lon)
        gaps = np.abs((times - np.datetime64(when, "s")).astype(np.float64)) / 60.0
        i = int(np.argmin(gaps))
        if gaps[i] > params.window_minutes:
            result.skipped.append((scene.date, "no station record within matching window"))
            continue
        if scene.theta > SERVICEABILITY_BOUND:
            result.skipped.append((scene.date, "exceeds serviceability bound"))
            continue
        if scene.clear[row, col]:
            sky = "clear"
            win = scene.lst.values[r0:r1, c0:c1]
            value = float(np.nanmean(win))
        else:
            sky = "cloudy"
            try:
                res = reconstruct(catalog, scene.date, params.mode, s_params, t_params, cache=cache)
            except LstFillError as exc:
                result.skipped.append((scene.date, str(exc)))
                continue
            value = float(res.output.values[r0:r1, c0:c1].mean())
        result.pairs.append(InsituPair(scene.date, sky, value, temps[i][1], float(gaps[i])))
    return result
