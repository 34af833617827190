"""Walkthrough: scoring detectors and testing visit composition.

Ground-truth boxes here are loose (drawn around the animal, not tight),
so matching uses a forgiving IoU floor of 0.1 with greedy assignment by
confidence. Precision/recall/F1 come straight from the match counts. The
chi-square test then asks whether the species mix among visits a
detector missed differs from the mix it caught -- the kind of bias that
silently skews ecology if it goes unchecked.

Run:  python demos/04_detector_scorecard.py
"""

import numpy as np

from phenotrap import ContingencyTable, chi_square, match_detections, prf
from phenotrap.imgproc import Box
from phenotrap.visits import DetectionEntry

rng = np.random.default_rng(8)


def e(x, y, w=30, h=30, conf=0.9):
    return DetectionEntry(bbox=Box(x, y, x + w, y + h), confidence=conf, label="bird")


pred, gt = {}, {}
for i in range(40):
    img = f"img{i:03d}.jpg"
    x, y = rng.integers(10, 150, 2).astype(float)
    gt[img] = [e(x, y, 40, 40)]
    if i < 29:  # found, with jitter and a loose box
        pred[img] = [e(x + rng.integers(-8, 8), y + rng.integers(-8, 8), 30, 30, conf=float(rng.uniform(0.4, 1.0)))]
    elif i < 33:  # false alarm far from the animal
        pred[img] = [e((x + 200) % 300, y, conf=float(rng.uniform(0.2, 0.6)))]
    else:  # missed outright
        pred[img] = []

result = match_detections(pred, gt, iou_min=0.1)
scores = prf(result)
print(f"tp={result.tp} fp={result.fp} fn={result.fn}")
print(f"precision={scores.precision:.3f} recall={scores.recall:.3f} f1={scores.f1:.3f}")

print("\nDoes the detector miss some species more than others?")
table = ContingencyTable(
    rows=("apapane", "amakihi"),
    columns=("detected", "missed"),
    counts=((46, 4), (30, 20)),
)
stat, df, p = chi_square(table)
print(f"chi-square statistic={stat:.3f} df={df} p={p:.2e}")
print("composition differs significantly" if p < 0.005 else "no significant difference")

uniform = ContingencyTable(("apapane", "amakihi"), ("detected", "missed"), ((25, 25), (25, 25)))
stat, df, p = chi_square(uniform)
print(f"\nControl, identical rows: statistic={stat} p={p}")
