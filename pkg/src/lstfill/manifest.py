"""Dataset manifests and run configuration.

A manifest is a YAML file listing one region's scenes::

    region: houston
    land_cover: nlcd_2021.tif
    revisit_days: 16
    dn_scale: 0.00341802      # optional, integer LST bands only
    dn_offset: 149.0
    scenes:
      - {date: 2019-08-16, lst: LC08_20190816_ST_B10.TIF, qa: LC08_20190816_QA_PIXEL.TIF, time: "16:52"}

Relative paths resolve against the manifest's directory. ``time`` is the
optional UTC acquisition time.
"""

from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import yaml

from .errors import ConfigError
from .fusion import ReconstructionMode
from .qa import QaPolicy, decode_qa
from .raster import NLCD_LEGEND, check_aligned, read_grid
from .scene import Scene
from .spatial import SpatialParams
from .temporal import SceneCatalog, TemporalParams


@dataclass(frozen=True)
class SceneEntry:
    date: dt.date
    lst: Path
    qa: Path
    time: Optional[dt.time] = None


@dataclass(frozen=True)
class DatasetManifest:
    region: str
    land_cover: Path
    scenes: List[SceneEntry]
    revisit_days: int = 16
    dn_scale: Optional[float] = None
    dn_offset: Optional[float] = None

    @property
    def dates(self) -> List[dt.date]:
        return [e.date for e in self.scenes]


def _as_date(v) -> dt.date:
    if isinstance(v, dt.datetime):
        return v.date()
    if isinstance(v, dt.date):
        return v
    return dt.date.fromisoformat(str(v))


def _as_time(v) -> Optional[dt.time]:
    if v is None:
        return None
    if isinstance(v, int):  # YAML 1.1 reads 16:45 as sexagesimal minutes
        return dt.time(v // 60, v % 60)
    return dt.time.fromisoformat(str(v))


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a manifest; every referenced file must exist."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"manifest not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: manifest must be a mapping")
    base = path.parent

    def resolve(p) -> Path:
        full = base / str(p)
        if not full.exists():
            raise ConfigError(f"{path}: referenced file does not exist: {full}")
        return full

    try:
        entries = [
            SceneEntry(_as_date(e["date"]), resolve(e["lst"]), resolve(e["qa"]), _as_time(e.get("time")))
            for e in doc.get("scenes") or []
        ]
        manifest = DatasetManifest(
            region=str(doc.get("region", path.stem)),
            land_cover=resolve(doc["land_cover"]),
            scenes=sorted(entries, key=lambda e: e.date),
            revisit_days=int(doc.get("revisit_days", 16)),
            dn_scale=doc.get("dn_scale"),
            dn_offset=doc.get("dn_offset"),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not manifest.scenes:
        raise ConfigError(f"{path}: no scenes listed")
    dates = manifest.dates
    if len(set(dates)) != len(dates):
        raise ConfigError(f"{path}: duplicate scene dates")
    return manifest


def build_catalog(manifest: DatasetManifest, policy: QaPolicy = QaPolicy(), crop_to_valid: bool = False) -> SceneCatalog:
    """Read every grid named in the manifest and assemble a catalog."""
    land = read_grid(manifest.land_cover, kind="landcover", legend=NLCD_LEGEND)
    scenes = []
    for e in manifest.scenes:
        lst = read_grid(e.lst, kind="lst", dn_scale=manifest.dn_scale, dn_offset=manifest.dn_offset)
        qa = read_grid(e.qa, kind="bitfield")
        check_aligned([land, lst, qa], ["land cover", f"{e.date} lst", f"{e.date} qa"])
        scenes.append(Scene(e.date, lst, decode_qa(qa, policy), e.time, crop_to_valid))
    return SceneCatalog(scenes, land, manifest.revisit_days, manifest.region)


@dataclass(frozen=True)
class RunConfig:
    spatial: SpatialParams = SpatialParams()
    temporal: TemporalParams = TemporalParams()
    qa: QaPolicy = QaPolicy()
    mode: ReconstructionMode = ReconstructionMode.M1
    output_dir: Path = Path("out")
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    crop_to_valid: bool = False
    absolute_shift: bool = False

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def load_config(path=None, **overrides) -> RunConfig:
    """Build a :class:`RunConfig` from an optional YAML file plus overrides.

    File layout mirrors the dataclasses::

        spatial: {f: 75, theta_star: 0.5}
        temporal: {n: 3, delta: 2, theta_max: 0.1}
        qa: {cloud: 3, cloud_shadow: 4, cirrus: 2, use_dilated_cloud: false}
        mode: m1
        output_dir: out
        threads: 4

    ``overrides`` use flat keys (``f``, ``theta_star``, ``n``, ``delta``,
    ``theta_max``, ``mode``, ``output_dir``, ``threads``, ``crop_to_valid``);
    ``None`` values are ignored. Any invariant violation raises
    :class:`ConfigError` before computation starts.
    """
    doc = {}
    if path is not None:
        try:
            doc = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a mapping")
    ov = {k: v for k, v in overrides.items() if v is not None}
    try:
        sp = dict(doc.get("spatial") or {})
        tp = dict(doc.get("temporal") or {})
        qa = dict(doc.get("qa") or {})
        for k in ("f", "theta_star"):
            if k in ov:
                sp[k] = ov.pop(k)
        for k in ("n", "delta", "theta_max"):
            if k in ov:
                tp[k] = ov.pop(k)
        cfg = RunConfig(spatial=SpatialParams(**sp), temporal=TemporalParams(**tp), qa=QaPolicy(**qa))
        scalars = {"mode", "output_dir", "threads", "crop_to_valid", "absolute_shift"}
        top = {k: v for k, v in doc.items() if k not in ("spatial", "temporal", "qa")}
        top.update(ov)
        unknown = set(top) - scalars
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "mode" in top and not isinstance(top["mode"], ReconstructionMode):
            top["mode"] = ReconstructionMode.parse(str(top["mode"]))
        if "output_dir" in top:
            top["output_dir"] = Path(top["output_dir"])
        return replace(cfg, **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
