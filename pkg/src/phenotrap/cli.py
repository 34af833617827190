"""Batch commands: ``greenness``, ``berries``, ``visits``, ``eval``, ``plot``.

Every command is deterministic: identical inputs produce byte-identical
outputs, so reruns are safe and diffs are meaningful. Warnings and skip
reasons go to stderr; the exit code is 0 iff no hard error occurred.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import timedelta
from pathlib import Path

from . import evaluation, ingest, series, svgplot, visits as visits_mod
from .config import SiteConfig, load_config
from .phenology import detect_berries, extract_foreground, greenness_score
from .series import NOISE, SeriesPoint, dbscan, fit_trend, points_from_observations
from .timeutil import format_utc, parse_utc

TREND_CSV_COLUMNS = ["camera_id", "metric", "degree", "coefficients", "r_squared", "n_inliers", "n_outliers"]
SKIP_CSV_COLUMNS = ["image", "reason"]


class CliError(Exception):
    """Hard error: reported on stderr, exit code 1."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phenotrap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, images=False, depth=False):
        p.add_argument("--config", help="site YAML (defaults + per-camera overrides)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for frame analysis")
        p.add_argument("--strict", action="store_true", help="turn skip conditions into hard errors")
        if images:
            p.add_argument("--images", required=True, help="directory of camera-trap images")
        if depth:
            p.add_argument("--depth-dir", help="directory of paired depth PNGs (default: alongside images)")

    p = sub.add_parser("greenness", help="depth-gated greenness series and trend")
    common(p, images=True, depth=True)

    p = sub.add_parser("berries", help="berry-count series and trend")
    common(p, images=True, depth=True)
    p.add_argument("--gate-foreground", action="store_true", help="restrict berry masks to the depth foreground")

    p = sub.add_parser("visits", help="filter detections and stitch visits")
    common(p)
    p.add_argument("--detections", required=True, help="interchange file of detector output")
    p.add_argument("--classifier", help="interchange file with taxon_class filled (overlays detections)")

    p = sub.add_parser("eval", help="score predictions against ground truth")
    common(p)
    p.add_argument("--pred", required=True, help="interchange file of predictions")
    p.add_argument("--gt", required=True, help="interchange file of ground truth (label = species)")
    p.add_argument("--iou-min", type=float, default=0.1, help="IoU floor for a match")

    p = sub.add_parser("plot", help="render CSV outputs as SVG figures")
    common(p)
    p.add_argument("files", nargs="+", help="series / trend / visits / daily-counts CSVs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        cfg = load_config(args.config)
        handler = {
            "greenness": cmd_greenness,
            "berries": cmd_berries,
            "visits": cmd_visits,
            "eval": cmd_eval,
            "plot": cmd_plot,
        }[args.command]
        handler(args, cfg, out_dir)
    except (CliError, ValueError, OSError) as exc:
        print(f"phenotrap {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


# -- frame metric workers (module level so they pickle for --jobs) -----------

def _greenness_frame(task):
    path, depth_dir, cfg_dict, strict = task
    site = SiteConfig(**cfg_dict)
    defaults = site.for_camera("")
    try:
        camera_id, ts = ingest.parse_frame_name(path, defaults.filename_pattern, defaults.timestamp_format)
    except ValueError as exc:
        return ("skip", path, str(exc))
    settings = site.for_camera(camera_id)
    depth_path = ingest.depth_path_for(path, depth_dir)
    if not depth_path.exists():
        if strict:
            raise CliError(f"missing depth map for {path} (expected {depth_path})")
        return ("skip", path, "missing depth map")
    frame = ingest.FrameSource(str(Path(path).parent), settings.filename_pattern, settings.timestamp_format).load_frame(path)
    depth = ingest.load_depth(depth_path)
    fg = extract_foreground(frame, depth, settings.greenness)
    if fg.insufficient:
        return ("skip", path, f"insufficient foreground (fraction {fg.fraction:.4f})")
    value = greenness_score(frame, fg.mask, settings.greenness)
    return ("ok", camera_id, ts, value, path)


def _berry_frame(task):
    path, depth_dir, cfg_dict, strict, gate = task
    site = SiteConfig(**cfg_dict)
    defaults = site.for_camera("")
    try:
        camera_id, ts = ingest.parse_frame_name(path, defaults.filename_pattern, defaults.timestamp_format)
    except ValueError as exc:
        return ("skip", path, str(exc))
    settings = site.for_camera(camera_id)
    frame = ingest.FrameSource(str(Path(path).parent), settings.filename_pattern, settings.timestamp_format).load_frame(path)
    foreground = None
    if gate:
        depth_path = ingest.depth_path_for(path, depth_dir)
        if not depth_path.exists():
            if strict:
                raise CliError(f"missing depth map for {path} (expected {depth_path})")
            return ("skip", path, "missing depth map")
        fg = extract_foreground(frame, ingest.load_depth(depth_path), settings.greenness)
        if fg.insufficient:
            return ("skip", path, f"insufficient foreground (fraction {fg.fraction:.4f})")
        foreground = fg.mask
    detection = detect_berries(frame, settings.berries, foreground=foreground)
    return ("ok", camera_id, ts, float(detection.count), path)


def _run_frames(worker, tasks, jobs):
    if jobs <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def _series_outputs(results, metric, site: SiteConfig, out_dir: Path, prefix: str):
    """Shared tail of greenness/berries: CSVs for series, trends, skips."""
    skips = sorted((path, reason) for kind, path, reason in
                   (r for r in results if r[0] == "skip"))
    rows = [r for r in results if r[0] == "ok"]

    by_camera = {}
    for _, camera_id, ts, value, path in rows:
        by_camera.setdefault(camera_id, []).append((ts, value, str(path)))

    series_rows = []
    trend_rows = []
    for camera_id in sorted(by_camera):
        settings = site.for_camera(camera_id)
        points, start = points_from_observations(by_camera[camera_id])
        degree = int(settings.degrees[metric])
        labels = dbscan(points, settings.dbscan)
        flags = [lab != NOISE for lab in labels]
        trend = fit_trend(points, degree, settings.dbscan)
        trend_rows.append((camera_id, metric, trend))
        for p, flag in zip(points, flags):
            series_rows.append((start, p, camera_id, flag))

    series_path = out_dir / f"{prefix}_series.csv"
    with open(series_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(series.SERIES_CSV_COLUMNS)
        for start, p, camera_id, flag in series_rows:
            ts = start + timedelta(days=p.t)
            writer.writerow([format_utc(ts), repr(float(p.value)), camera_id, metric, int(flag)])

    write_trend_csv(out_dir / f"{prefix}_trend.csv", trend_rows)

    with open(out_dir / f"{prefix}_skips.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SKIP_CSV_COLUMNS)
        for path, reason in skips:
            writer.writerow([str(path), reason])
    for path, reason in skips:
        print(f"skipped {path}: {reason}", file=sys.stderr)


def write_trend_csv(path, trend_rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TREND_CSV_COLUMNS)
        for camera_id, metric, t in trend_rows:
            coef = " ".join(repr(c) for c in t.coefficients)
            writer.writerow([camera_id, metric, t.degree, coef, repr(t.r_squared), t.inlier_count, t.outlier_count])


def read_trend_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, TREND_CSV_COLUMNS, path)
        for rec in reader:
            rows.append(
                {
                    "camera_id": rec["camera_id"],
                    "metric": rec["metric"],
                    "degree": int(rec["degree"]),
                    "coefficients": tuple(float(c) for c in rec["coefficients"].split()),
                    "r_squared": float(rec["r_squared"]),
                }
            )
    return rows


def cmd_greenness(args, cfg: SiteConfig, out_dir: Path):
    paths = ingest.list_images(args.images)
    tasks = [(str(p), args.depth_dir, {"defaults": cfg.defaults, "cameras": cfg.cameras}, args.strict) for p in paths]
    results = _run_frames(_greenness_frame, tasks, args.jobs)
    _series_outputs(results, "greenness", cfg, out_dir, "greenness")


def cmd_berries(args, cfg: SiteConfig, out_dir: Path):
    paths = ingest.list_images(args.images)
    tasks = [
        (str(p), args.depth_dir, {"defaults": cfg.defaults, "cameras": cfg.cameras}, args.strict, args.gate_foreground)
        for p in paths
    ]
    results = _run_frames(_berry_frame, tasks, args.jobs)
    _series_outputs(results, "berries", cfg, out_dir, "berry")


def cmd_visits(args, cfg: SiteConfig, out_dir: Path):
    records = visits_mod.load_detections(args.detections)
    detectors = sorted({r.detector for r in records})
    if len(detectors) > 1:
        raise CliError(f"single detector per run; found {detectors}")
    classifier_given = args.classifier is not None
    if classifier_given:
        records = _overlay_taxon(records, visits_mod.load_detections(args.classifier))

    all_visits = []
    summary_lines = []
    by_camera = {}
    for r in records:
        by_camera.setdefault(r.camera_id, []).append(r)
    for camera_id in sorted(by_camera):
        settings = cfg.for_camera(camera_id)
        cam_visits, _, summary = visits_mod.run_pipeline(
            by_camera[camera_id],
            settings.visits,
            apply_taxon_filter=classifier_given or None,
        )
        all_visits.extend(cam_visits)
        summary_lines.append(f"[{camera_id}] " + "; ".join(summary.lines()))

    visits_mod.write_visits_csv(out_dir / "visits.csv", all_visits)
    visits_mod.write_daily_counts_csv(out_dir / "daily_counts.csv", visits_mod.daily_counts(all_visits))
    for line in summary_lines:
        print(line, file=sys.stderr)


def _overlay_taxon(records, classified):
    """Copy taxon_class from a classifier pass onto the raw detections.

    Entries are matched positionally per image; the classifier pass must
    not add, drop, or reorder detections.
    """
    by_image = {r.image_path: r for r in classified}
    missing = sorted(set(r.image_path for r in records) - set(by_image))
    if missing:
        raise CliError(f"classifier file missing images: {missing[:5]}")
    out = []
    for rec in records:
        cls = by_image[rec.image_path]
        if len(cls.entries) != len(rec.entries):
            raise CliError(f"classifier entry count differs for {rec.image_path}")
        for a, b in zip(rec.entries, cls.entries):
            if a.bbox != b.bbox:
                raise CliError(f"classifier bbox differs for {rec.image_path}")
        out.append(
            replace(
                rec,
                entries=tuple(
                    replace(a, taxon_class=b.taxon_class) for a, b in zip(rec.entries, cls.entries)
                ),
            )
        )
    return out


def cmd_eval(args, cfg: SiteConfig, out_dir: Path):
    pred_records = visits_mod.load_detections(args.pred)
    gt_records = visits_mod.load_detections(args.gt)
    if not gt_records:
        raise CliError(f"ground-truth file {args.gt} contains no records")

    gt_by_image = {}
    for r in gt_records:
        gt_by_image.setdefault(r.image_path, []).extend(r.entries)

    by_method = {}
    for r in pred_records:
        by_method.setdefault(r.detector, {}).setdefault(r.image_path, []).extend(r.entries)

    rows = []
    for method in sorted(by_method):
        result = evaluation.match_detections(by_method[method], gt_by_image, args.iou_min)
        rows.append((method, evaluation.prf(result), (result.tp, result.fp, result.fn)))
    evaluation.write_eval_csv(out_dir / "eval_report.csv", rows)


def _check_columns(fieldnames, expected, path):
    fieldnames = list(fieldnames or [])
    unknown = [c for c in fieldnames if c not in expected]
    missing = [c for c in expected if c not in fieldnames]
    if unknown or missing:
        parts = []
        if unknown:
            parts.append(f"unknown column {unknown[0]!r}")
        if missing:
            parts.append(f"missing column {missing[0]!r}")
        raise CliError(f"{path}: {'; '.join(parts)}")


def _classify_csv(path):
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    schemas = {
        "series": series.SERIES_CSV_COLUMNS,
        "trend": TREND_CSV_COLUMNS,
        "visits": visits_mod.VISITS_CSV_COLUMNS,
        "daily": visits_mod.DAILY_CSV_COLUMNS,
    }
    for kind, cols in schemas.items():
        if header == cols:
            return kind
    # closest schema by overlap, then name the offending column
    best = max(schemas.values(), key=lambda cols: len(set(header) & set(cols)))
    _check_columns(header, best, path)
    raise CliError(f"{path}: unrecognized CSV schema")


def cmd_plot(args, cfg: SiteConfig, out_dir: Path):
    series_files = []
    trend_files = []
    other = []
    for f in args.files:
        kind = _classify_csv(f)
        if kind == "series":
            series_files.append(f)
        elif kind == "trend":
            trend_files.append(f)
        else:
            other.append((kind, f))

    trends = {}
    for f in trend_files:
        for row in read_trend_csv(f):
            trends[(row["camera_id"], row["metric"])] = row["coefficients"]
    if trend_files and not series_files:
        print("trend CSVs supply overlays only; no series file given", file=sys.stderr)

    for f in series_files:
        rows = series.read_series_csv(f)
        if not rows:
            svg = svgplot.render_series([], title=Path(f).stem, x_label="days", y_label="value")
            (out_dir / f"{Path(f).stem}.svg").write_text(svg)
            continue
        groups = {}
        for row in rows:
            groups.setdefault((row["camera_id"], row["metric"]), []).append(row)
        for (camera_id, metric) in sorted(groups):
            grp = sorted(groups[(camera_id, metric)], key=lambda r: r["timestamp"])
            start = grp[0]["timestamp"]
            pts = [
                SeriesPoint(t=(r["timestamp"] - start).total_seconds() / 86400.0, value=r["value"])
                for r in grp
            ]
            flags = [r["inlier"] for r in grp]
            svg = svgplot.render_series(
                pts,
                trend_coefficients=trends.get((camera_id, metric)),
                inlier_flags=flags,
                title=f"{metric} at {camera_id}",
                x_label="days since first frame",
                y_label=metric,
            )
            name = f"{Path(f).stem}_{camera_id}_{metric}.svg"
            (out_dir / name).write_text(svg)

    for kind, f in other:
        if kind == "visits":
            with open(f, newline="") as fh:
                reader = csv.DictReader(fh)
                vis = [
                    visits_mod.Visit(
                        camera_id=rec["camera_id"],
                        species=rec["species"],
                        start=parse_utc(rec["start"]),
                        end=parse_utc(rec["end"]),
                        n_frames=int(rec["n_frames"]),
                        member_refs=tuple([""] * int(rec["n_frames"])),
                    )
                    for rec in reader
                ]
            counts = visits_mod.daily_counts(vis)
            title = "visits per day"
        else:
            with open(f, newline="") as fh:
                reader = csv.DictReader(fh)
                counts = [
                    visits_mod.DailyCount(
                        date=rec["date"],
                        camera_id=rec["camera_id"],
                        species=rec["species"],
                        visits=int(rec["visits"]),
                    )
                    for rec in reader
                ]
            title = "daily visit counts"
        svg = svgplot.render_daily_counts(counts, title=title)
        (out_dir / f"{Path(f).stem}.svg").write_text(svg)


if __name__ == "__main__":
    sys.exit(main())
