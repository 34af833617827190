"""Detection post-processing: interchange ingestion, confidence/taxon
filters, static false-positive suppression, temporal visit stitching, and
per-species daily counts.

The interchange format is line-oriented JSON: one object per image with
fields ``image``, ``camera_id``, ``timestamp`` (ISO-8601 UTC),
``detector``, and ``detections`` (list of ``bbox`` [x_min, y_min, x_max,
y_max] in pixels, ``confidence``, ``label``, optional ``taxon_class``).
Adapters produce it; everything in this module consumes it.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

from .imgproc import Box, iou
from .timeutil import format_utc, parse_utc

__all__ = [
    "DetectionEntry",
    "DetectionRecord",
    "VisitConfig",
    "Visit",
    "DailyCount",
    "PipelineSummary",
    "load_detections",
    "dump_detections",
    "filter_confidence",
    "filter_taxon",
    "suppress_static",
    "stitch_visits",
    "daily_counts",
    "run_pipeline",
    "write_visits_csv",
    "write_daily_counts_csv",
]

VISITS_CSV_COLUMNS = ["camera_id", "species", "start", "end", "n_frames"]
DAILY_CSV_COLUMNS = ["date", "camera_id", "species", "visits"]


@dataclass(frozen=True)
class DetectionEntry:
    bbox: Box
    confidence: float
    label: str
    taxon_class: str | None = None


@dataclass(frozen=True)
class DetectionRecord:
    image_path: str
    camera_id: str
    timestamp: datetime
    detector: str
    entries: tuple


@dataclass(frozen=True)
class VisitConfig:
    confidence_min: float = 0.2
    static_iou: float = 0.75
    static_run: int = 5
    stitch_gap_s: float = 15.0
    taxon_keep: frozenset = field(default=frozenset({"Aves"}))

    def __post_init__(self):
        if not 0.0 <= self.confidence_min <= 1.0:
            raise ValueError("confidence_min must be in [0, 1]")
        if not 0.0 <= self.static_iou <= 1.0:
            raise ValueError("static_iou must be in [0, 1]")
        if self.static_run < 2:
            raise ValueError("static_run must be >= 2")
        if self.stitch_gap_s <= 0:
            raise ValueError("stitch_gap_s must be > 0")
        object.__setattr__(self, "taxon_keep", frozenset(self.taxon_keep))


@dataclass(frozen=True)
class Visit:
    camera_id: str
    species: str
    start: datetime
    end: datetime
    n_frames: int
    member_refs: tuple
    species_tie: bool = False

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("visit start after end")
        if self.n_frames != len(self.member_refs):
            raise ValueError("n_frames disagrees with member_refs")


@dataclass(frozen=True)
class DailyCount:
    date: str  # YYYY-MM-DD, UTC day of the visit start
    camera_id: str
    species: str
    visits: int


@dataclass
class PipelineSummary:
    """Entry attrition per stage, for the diagnostic stream."""

    entries_loaded: int = 0
    dropped_confidence: int = 0
    dropped_taxon_missing: int = 0
    dropped_taxon_other: int = 0
    dropped_static: int = 0
    entries_kept: int = 0

    def lines(self):
        return [
            f"entries loaded: {self.entries_loaded}",
            f"dropped below confidence: {self.dropped_confidence}",
            f"dropped missing taxon_class: {self.dropped_taxon_missing}",
            f"dropped other taxon: {self.dropped_taxon_other}",
            f"dropped static runs: {self.dropped_static}",
            f"entries kept: {self.entries_kept}",
        ]


def _entry_from_json(obj, where):
    try:
        bbox = obj["bbox"]
        confidence = float(obj["confidence"])
        label = str(obj["label"])
    except KeyError as exc:
        raise ValueError(f"{where}: detection missing field {exc.args[0]!r}") from None
    if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
        raise ValueError(f"{where}: field 'bbox' must be [x_min, y_min, x_max, y_max]")
    x0, y0, x1, y1 = (float(v) for v in bbox)
    if x0 >= x1 or y0 >= y1:
        raise ValueError(f"{where}: field 'bbox' has non-positive area")
    if not 0.0 <= confidence <= 1.0:
        raise ValueError(f"{where}: field 'confidence' out of range: {confidence}")
    taxon = obj.get("taxon_class")
    return DetectionEntry(
        bbox=Box(x0, y0, x1, y1),
        confidence=confidence,
        label=label,
        taxon_class=None if taxon is None else str(taxon),
    )


def load_detections(path, lenient: bool = False):
    """Parse and validate an interchange file, sorted by (camera, time).

    Strict by default: a malformed record or out-of-range value raises with
    the line and field named. With ``lenient=True``, invalid detections are
    dropped instead and returned as a count: ``(records, n_dropped)``.
    """
    records = []
    n_dropped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{where}: not valid JSON ({exc.msg})") from None
            try:
                missing = [k for k in ("image", "camera_id", "timestamp", "detector") if k not in obj]
                if missing:
                    raise ValueError(f"{where}: record missing field {missing[0]!r}")
                try:
                    ts = parse_utc(str(obj["timestamp"]))
                except ValueError:
                    raise ValueError(f"{where}: field 'timestamp' is not ISO-8601") from None
                entries = []
                for det in obj.get("detections", []):
                    try:
                        entries.append(_entry_from_json(det, where))
                    except ValueError:
                        if lenient:
                            n_dropped += 1
                        else:
                            raise
                records.append(
                    DetectionRecord(
                        image_path=str(obj["image"]),
                        camera_id=str(obj["camera_id"]),
                        timestamp=ts,
                        detector=str(obj["detector"]),
                        entries=tuple(entries),
                    )
                )
            except ValueError:
                if lenient:
                    n_dropped += 1
                    continue
                raise
    records.sort(key=lambda r: (r.camera_id, r.timestamp, r.image_path))
    if lenient:
        return records, n_dropped
    return records


def dump_detections(records, path):
    """Write records back out in the interchange format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(record_to_json(rec) + "\n")


def record_to_json(rec: DetectionRecord) -> str:
    obj = {
        "image": rec.image_path,
        "camera_id": rec.camera_id,
        "timestamp": format_utc(rec.timestamp),
        "detector": rec.detector,
        "detections": [
            {
                "bbox": [e.bbox.x_min, e.bbox.y_min, e.bbox.x_max, e.bbox.y_max],
                "confidence": e.confidence,
                "label": e.label,
                "taxon_class": e.taxon_class,
            }
            for e in rec.entries
        ],
    }
    return json.dumps(obj, sort_keys=True)


def filter_confidence(records, confidence_min: float):
    """Drop entries below the floor (inclusive keep at the threshold)."""
    return [
        replace(rec, entries=tuple(e for e in rec.entries if e.confidence >= confidence_min))
        for rec in records
    ]


def filter_taxon(records, taxon_keep):
    """Keep entries whose taxon_class is in the keep set.

    Entries lacking a taxon_class are dropped too; callers report the
    count (see PipelineSummary).
    """
    keep = frozenset(taxon_keep)
    return [
        replace(rec, entries=tuple(e for e in rec.entries if e.taxon_class in keep))
        for rec in records
    ]


def count_missing_taxon(records) -> int:
    return sum(1 for rec in records for e in rec.entries if e.taxon_class is None)


def _group_by_camera(records):
    groups = {}
    for rec in records:
        groups.setdefault(rec.camera_id, []).append(rec)
    for cam in groups:
        groups[cam].sort(key=lambda r: (r.timestamp, r.image_path))
    return groups


def suppress_static(records, static_iou: float = 0.75, static_run: int = 5):
    """Remove stuck false positives (branches, litter) for one camera.

    A static run is a chain of entries across >= static_run consecutive
    frames where each entry overlaps its chained predecessor with IoU
    above the cut. Chaining is frame-to-frame (robust to slow sensor
    drift); each entry extends at most one chain, greedily by best IoU.
    Only the chained entries are removed; anything else in those frames
    survives.
    """
    records = sorted(records, key=lambda r: (r.timestamp, r.image_path))
    removed = set()  # (record_idx, entry_idx)
    active = []  # chains: {"last": Box, "members": [(ri, ei), ...]}

    def close(chain):
        if len(chain["members"]) >= static_run:
            removed.update(chain["members"])

    for ri, rec in enumerate(records):
        used = set()
        surviving = []
        for chain in active:
            best_ei, best_iou = None, static_iou
            for ei, entry in enumerate(rec.entries):
                if ei in used:
                    continue
                v = iou(chain["last"], entry.bbox)
                if v > best_iou:
                    best_ei, best_iou = ei, v
            if best_ei is None:
                close(chain)
            else:
                used.add(best_ei)
                chain["last"] = rec.entries[best_ei].bbox
                chain["members"].append((ri, best_ei))
                surviving.append(chain)
        for ei, entry in enumerate(rec.entries):
            if ei not in used:
                surviving.append({"last": entry.bbox, "members": [(ri, ei)]})
        active = surviving
    for chain in active:
        close(chain)

    out = []
    for ri, rec in enumerate(records):
        kept = tuple(e for ei, e in enumerate(rec.entries) if (ri, ei) not in removed)
        out.append(replace(rec, entries=kept))
    return out


def _majority_species(entries):
    labels = [e.label for e in entries if e.label]
    if not labels:
        return "unclassified", False
    counts = Counter(labels)
    top = max(counts.values())
    winners = sorted(lab for lab, n in counts.items() if n == top)
    return winners[0], len(winners) > 1


def stitch_visits(records, stitch_gap_s: float = 15.0):
    """Group one camera's detection frames into visits.

    A frame joins the current visit iff its gap to the previous member is
    under the cut; species is the majority label over member entries
    (ties resolve lexicographically and are flagged).
    """
    frames = [r for r in sorted(records, key=lambda r: (r.timestamp, r.image_path)) if r.entries]
    visits = []
    current = []
    for rec in frames:
        if current and (rec.timestamp - current[-1].timestamp).total_seconds() >= stitch_gap_s:
            visits.append(_make_visit(current))
            current = []
        current.append(rec)
    if current:
        visits.append(_make_visit(current))
    return visits


def _make_visit(frames):
    species, tie = _majority_species([e for rec in frames for e in rec.entries])
    return Visit(
        camera_id=frames[0].camera_id,
        species=species,
        start=frames[0].timestamp,
        end=frames[-1].timestamp,
        n_frames=len(frames),
        member_refs=tuple(rec.image_path for rec in frames),
        species_tie=tie,
    )


def daily_counts(visits):
    """Visits per (UTC start date, camera, species); a visit spanning
    midnight counts on its start date."""
    counts = Counter(
        (v.start.astimezone(timezone.utc).strftime("%Y-%m-%d"), v.camera_id, v.species)
        for v in visits
    )
    return [
        DailyCount(date=d, camera_id=cam, species=sp, visits=n)
        for (d, cam, sp), n in sorted(counts.items())
    ]


def run_pipeline(records, cfg: VisitConfig = VisitConfig(), apply_taxon_filter=None):
    """Full post-processing chain: confidence -> taxon -> static -> visits.

    The taxon stage runs when any entry carries a taxon_class (or always /
    never, via ``apply_taxon_filter``); skipping it keeps raw detector
    output usable without a classifier pass. Returns
    (visits, daily_counts, PipelineSummary).
    """
    summary = PipelineSummary(entries_loaded=_n_entries(records))
    records = filter_confidence(records, cfg.confidence_min)
    summary.dropped_confidence = summary.entries_loaded - _n_entries(records)

    if apply_taxon_filter is None:
        apply_taxon_filter = any(e.taxon_class is not None for r in records for e in r.entries)
    if apply_taxon_filter:
        before = _n_entries(records)
        summary.dropped_taxon_missing = count_missing_taxon(records)
        records = filter_taxon(records, cfg.taxon_keep)
        summary.dropped_taxon_other = before - _n_entries(records) - summary.dropped_taxon_missing

    visits = []
    before_static = _n_entries(records)
    n_after_static = 0
    for camera_id, cam_records in sorted(_group_by_camera(records).items()):
        cam_records = suppress_static(cam_records, cfg.static_iou, cfg.static_run)
        n_after_static += _n_entries(cam_records)
        visits.extend(stitch_visits(cam_records, cfg.stitch_gap_s))
    summary.dropped_static = before_static - n_after_static
    summary.entries_kept = n_after_static
    return visits, daily_counts(visits), summary


def _n_entries(records):
    return sum(len(r.entries) for r in records)


def write_visits_csv(path, visits):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(VISITS_CSV_COLUMNS)
        for v in sorted(visits, key=lambda v: (v.camera_id, v.start, v.species)):
            writer.writerow([v.camera_id, v.species, format_utc(v.start), format_utc(v.end), v.n_frames])


def write_daily_counts_csv(path, counts):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DAILY_CSV_COLUMNS)
        for c in sorted(counts, key=lambda c: (c.date, c.camera_id, c.species)):
            writer.writerow([c.date, c.camera_id, c.species, c.visits])
