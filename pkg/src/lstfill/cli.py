"""Command-line interface.

Exit status: 0 success, 1 partial (or total) failure of the requested dates,
2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, LstFillError, NoReferencesError, ServiceabilityError
from .evaluation import (
    AblationTable,
    InsituParams,
    OcclusionSpec,
    ablation_suite,
    broadband_emissivity,
    insitu_validate,
    read_station_records,
)
from .fusion import ReconstructionMode, reconstruct
from .manifest import RunConfig, build_catalog, load_config, load_manifest
from .raster import read_grid, write_array, write_grid
from .temporal import candidate_references, select_references

logger = logging.getLogger("lstfill")

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("manifest", type=Path, help="dataset manifest (YAML)")
    p.add_argument("--config", type=Path, help="run configuration (YAML)")
    p.add_argument("--mode", choices=[m.value for m in ReconstructionMode], help="reconstruction mode")
    p.add_argument("--window", type=int, dest="f", help="spatial window side f (odd, pixels)")
    p.add_argument("--theta-star", type=float, help="local/global switch threshold")
    p.add_argument("--refs", type=int, dest="n", help="number of reference scenes")
    p.add_argument("--bracket", type=int, dest="delta", help="seasonal bracket in revisit cycles")
    p.add_argument("--theta-max", type=float, help="max occlusion of a reference scene")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--out", type=Path, dest="output_dir", help="output directory")
    p.add_argument("--crop-to-valid", action="store_true", default=None,
                   help="exclude QA fill pixels from the occlusion factor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lstfill", description="Land-cover-aware LST cloud gap filling.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="reconstruct one or more dates")
    _common(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--date", action="append", type=dt.date.fromisoformat, help="target date (repeatable)")
    g.add_argument("--all", action="store_true", help="every date in the manifest")
    p.add_argument("--provenance", action="store_true", help="also write a per-pixel provenance GeoTIFF")

    p = sub.add_parser("simulate", help="artificial-occlusion ablation (MAE/RMSE per mode)")
    _common(p)
    p.add_argument("--occlusion-size", type=int, required=True, help="square side s (pixels)")
    p.add_argument("--occlusion-count", type=int, required=True, help="max squares n per scene")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modes", default="m1,m2,m3,m4,m5", help="comma-separated modes")
    p.add_argument("--csv", type=Path, help="report path (default: <out>/<region>/simulate.csv)")

    p = sub.add_parser("insitu", help="compare against station longwave-flux skin temperature")
    _common(p)
    p.add_argument("--records", type=Path, required=True, help="CSV with timestamp,f_up,f_down")
    loc = p.add_mutually_exclusive_group(required=True)
    loc.add_argument("--pixel", type=int, nargs=2, metavar=("ROW", "COL"))
    loc.add_argument("--latlon", type=float, nargs=2, metavar=("LAT", "LON"))
    em = p.add_mutually_exclusive_group(required=True)
    em.add_argument("--emissivity", type=float, help="broadband emissivity")
    em.add_argument("--aster-emissivity", type=float, nargs=5, metavar="E", help="ASTER bands 10-14")
    p.add_argument("--match-minutes", type=float, default=10.0)
    p.add_argument("--footprint", type=int, default=1, help="odd k for a k x k pixel mean")
    p.add_argument("--csv", type=Path, help="pair output path (default: <out>/<region>/insitu.csv)")

    p = sub.add_parser("series", help="per-class mean reconstructed LST per date (CSV)")
    _common(p)
    p.add_argument("--csv", type=Path, help="output path (default: <out>/<region>/series.csv)")

    p = sub.add_parser("heatdays", help="per-pixel count of dates above a threshold")
    _common(p)
    p.add_argument("--threshold", type=float, required=True, help="threshold in kelvin")

    p = sub.add_parser("catalog", help="list scenes, occlusion factors and references")
    _common(p)

    p = sub.add_parser("synth", help="write a synthetic demo dataset")
    p.add_argument("outdir", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--scenes", type=int, default=5)
    return parser


def _config(args) -> RunConfig:
    keys = ("f", "theta_star", "n", "delta", "theta_max", "threads", "output_dir", "crop_to_valid", "mode")
    return load_config(args.config, **{k: getattr(args, k, None) for k in keys})


def _outdir(cfg: RunConfig, region: str) -> Path:
    d = cfg.output_dir / region
    d.mkdir(parents=True, exist_ok=True)
    return d


def _reconstruct_dates(catalog, dates, cfg: RunConfig, outdir: Path, provenance=False):
    """Reconstruct ``dates`` in parallel; returns report dicts in date order."""
    cache: dict = {}

    def job(date):
        rec = {"date": date.isoformat(), "mode": cfg.mode.value}
        t0 = time.perf_counter()
        try:
            res = reconstruct(catalog, date, cfg.mode, cfg.spatial, cfg.temporal, cache=cache,
                              absolute_shift=cfg.absolute_shift)
        except ServiceabilityError as exc:
            rec.update(status="skipped", theta=catalog.scene_on(date).theta, error=str(exc))
            logger.warning("%s", exc)
            return rec
        except LstFillError as exc:
            rec.update(status="failed", theta=catalog.scene_on(date).theta, error=str(exc))
            logger.error("%s: %s", date, exc)
            return rec
        path = outdir / f"{date.isoformat()}_lst_reconstructed.tif"
        write_grid(res.output, path)
        if provenance:
            write_array(outdir / f"{date.isoformat()}_provenance.tif", res.provenance, res.output.georef)
        rec.update(
            status="ok",
            theta=res.theta,
            references=[d.isoformat() for d in res.references_used],
            warnings=res.warnings,
            output=path.name,
            elapsed_s=round(time.perf_counter() - t0, 3),
        )
        return rec

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(job, dates))


def _status(records) -> int:
    ok = sum(r["status"] == "ok" for r in records)
    failed = sum(r["status"] == "failed" for r in records)
    return EXIT_OK if ok and not failed else EXIT_PARTIAL


def cmd_reconstruct(args, catalog, cfg) -> int:
    if args.all:
        dates = catalog.dates
    else:
        missing = [d for d in args.date if d not in catalog.dates]
        if missing:
            avail = ", ".join(d.isoformat() for d in catalog.dates)
            raise ConfigError(f"date(s) {', '.join(map(str, missing))} not in manifest; available: {avail}")
        dates = sorted(set(args.date))
    outdir = _outdir(cfg, catalog.region)
    records = _reconstruct_dates(catalog, dates, cfg, outdir, args.provenance)
    with open(outdir / "report.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    for r in records:
        print(f"{r['date']}  theta={r['theta']:.4f}  {r['status']}" + (f"  ({r['error']})" if "error" in r else ""))
    return _status(records)


def _reconstructed_grids(catalog, cfg):
    """Reconstruct every date to disk and yield ``(date, LstGrid)`` read back from the files."""
    outdir = _outdir(cfg, catalog.region)
    records = _reconstruct_dates(catalog, catalog.dates, cfg, outdir)
    for r in records:
        if r["status"] == "ok":
            yield dt.date.fromisoformat(r["date"]), read_grid(outdir / r["output"], kind="lst")


def cmd_series(args, catalog, cfg) -> int:
    land = catalog.land
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["date", "class_code", "class_name", "mean_lst_k", "pixel_count"])
    n_dates = 0
    for date, grid in _reconstructed_grids(catalog, cfg):
        n_dates += 1
        for code in land.codes():
            sel = (land.classes == code) & grid.valid
            if sel.any():
                mean = grid.values[sel].mean(dtype=np.float64)
                wr.writerow([date.isoformat(), int(code), land.name_of(code), f"{mean:.4f}", int(sel.sum())])
    path = args.csv or _outdir(cfg, catalog.region) / "series.csv"
    Path(path).write_text(buf.getvalue())
    print(f"wrote {path} ({n_dates} date(s))")
    return EXIT_OK if n_dates else EXIT_PARTIAL


def cmd_heatdays(args, catalog, cfg) -> int:
    if not np.isfinite(args.threshold):
        raise ConfigError("threshold must be finite")
    counts = np.zeros(catalog.land.shape.as_tuple(), dtype=np.uint16)
    n_dates = 0
    for _, grid in _reconstructed_grids(catalog, cfg):
        n_dates += 1
        counts += (grid.valid & (np.nan_to_num(grid.values, nan=-np.inf) > args.threshold)).astype(np.uint16)
    path = _outdir(cfg, catalog.region) / f"heatdays_{args.threshold:.2f}K.tif"
    write_array(path, counts, catalog.land.georef)
    print(f"wrote {path} ({n_dates} date(s), max count {int(counts.max())})")
    return EXIT_OK if n_dates else EXIT_PARTIAL


def cmd_simulate(args, catalog, cfg) -> int:
    try:
        modes = [ReconstructionMode.parse(m) for m in args.modes.split(",") if m.strip()]
        spec = OcclusionSpec(args.occlusion_size, args.occlusion_count, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    table: AblationTable = ablation_suite(catalog, spec, modes, cfg.spatial, cfg.temporal)
    path = args.csv or _outdir(cfg, catalog.region) / "simulate.csv"
    table.to_csv(path)
    print(table.format_table())
    for date, mode, err in table.failures:
        print(f"failed {date} {mode}: {err}")
    print(f"wrote {path}")
    return EXIT_OK if table.reports and not table.failures else EXIT_PARTIAL


def cmd_insitu(args, catalog, cfg) -> int:
    eps = args.emissivity if args.emissivity is not None else broadband_emissivity(*args.aster_emissivity)
    lat = lon = None
    if args.pixel:
        pixel = tuple(args.pixel)
    else:
        from rasterio.warp import transform

        lat, lon = args.latlon
        xs, ys = transform("EPSG:4326", catalog.land.georef.crs_id, [lon], [lat])
        pixel = catalog.land.georef.pixel_of(xs[0], ys[0])
    try:
        records = read_station_records(args.records, eps, lat, lon)
        params = InsituParams(args.match_minutes, args.footprint, cfg.mode)
        result = insitu_validate(catalog, records, pixel, params, cfg.spatial, cfg.temporal)
    except (ValueError, KeyError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    path = args.csv or _outdir(cfg, catalog.region) / "insitu.csv"
    Path(path).write_text(result.to_csv())
    for sky in ("clear", "cloudy"):
        st = result.stats(sky)
        if st["n"] == 0:
            print(f"{sky:>6}-sky: no pairs")
        else:
            print(f"{sky:>6}-sky: n={st['n']}  RMSE={st['rmse']:.3f} K  bias={st['bias']:+.3f} K")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_catalog(args, catalog, cfg) -> int:
    print(f"region {catalog.region}: {len(catalog)} scene(s), revisit {catalog.cycle_days} d")
    for s in catalog.scenes:
        try:
            refs = ",".join(r.date.isoformat() for r in select_references(catalog, s, cfg.temporal))
        except NoReferencesError:
            refs = "-"
        n_cand = len(candidate_references(catalog, s, cfg.temporal))
        print(f"{s.date}  theta={s.theta:.4f}  candidates={n_cand}  refs={refs}")
    return EXIT_OK


COMMANDS = {
    "reconstruct": cmd_reconstruct,
    "simulate": cmd_simulate,
    "insitu": cmd_insitu,
    "series": cmd_series,
    "heatdays": cmd_heatdays,
    "catalog": cmd_catalog,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            from .synthetic import write_dataset

            print(write_dataset(args.outdir, args.seed, shape=(args.size, args.size), n_scenes=args.scenes))
            return EXIT_OK
        cfg = _config(args)
        catalog = build_catalog(load_manifest(args.manifest), cfg.qa, cfg.crop_to_valid)
        return COMMANDS[args.command](args, catalog, cfg)
    except (ConfigError, LstFillError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
