"""Walkthrough: from raw detector output to per-day visit counts.

Camera traps fire in bursts, detectors hallucinate on branches, and the
classifier stage tags what each box actually is. The post-processing
chain: keep detections at confidence >= 0.2, keep only Aves, delete
boxes that sit still (IoU > 0.75) for 5+ consecutive frames, then stitch
frames separated by < 15 s into visits and tally visits per species per
day.

Run:  python demos/03_bird_visits.py
"""

from datetime import datetime, timedelta, timezone

from phenotrap import DetectionEntry, DetectionRecord, VisitConfig, run_pipeline
from phenotrap.imgproc import Box

start = datetime(2025, 2, 3, 6, 30, tzinfo=timezone.utc)


def rec(minute, second, entries, image=None):
    ts = start + timedelta(minutes=minute, seconds=second)
    return DetectionRecord(
        image_path=image or f"CAM03_{ts.strftime('%Y%m%dT%H%M%S')}.jpg",
        camera_id="CAM03",
        timestamp=ts,
        detector="owlv2",
        entries=tuple(entries),
    )


def bird(x, y, conf, species, taxon="Aves"):
    return DetectionEntry(bbox=Box(x, y, x + 30, y + 30), confidence=conf, label=species, taxon_class=taxon)


branch = DetectionEntry(bbox=Box(200, 10, 260, 90), confidence=0.55, label="bird", taxon_class="Plantae")
stuck = DetectionEntry(bbox=Box(5, 5, 45, 60), confidence=0.9, label="bird", taxon_class="Aves")

records = []
# morning: an apapane works the canopy, three bursts under 15 s apart
for burst, t0 in enumerate([0, 2, 50]):
    for k in range(3):
        records.append(rec(t0, 5 * k, [bird(60 + 4 * k, 40, 0.85, "apapane")]))
# the wind-shaken branch fires all morning (low-ish confidence, Plantae)
for m in range(0, 60, 10):
    records.append(rec(m, 7, [branch]))
# a perfectly static box repeats for 6 consecutive frames: sensor ghost
for k in range(6):
    records.append(rec(90, 2 * k, [stuck]))
# afternoon: an omao, plus an under-threshold flicker
records.append(rec(400, 0, [bird(120, 80, 0.74, "omao")]))
records.append(rec(400, 9, [bird(124, 82, 0.81, "omao")]))
records.append(rec(410, 0, [bird(10, 10, 0.12, "omao")]))

visits, daily, summary = run_pipeline(records, VisitConfig())

print("Filter attrition:")
for line in summary.lines():
    print("  " + line)

print(f"\n{len(visits)} visits survive:")
for v in visits:
    gap = (v.end - v.start).total_seconds()
    print(f"  {v.species:9s} {v.start:%H:%M:%S} +{gap:3.0f}s  frames={v.n_frames}")

print("\nDaily counts:")
for c in daily:
    print(f"  {c.date} {c.camera_id} {c.species:9s} visits={c.visits}")
