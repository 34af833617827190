"""End to end: adapter exports feed the analysis CLI unchanged."""

import csv
from datetime import datetime, timedelta, timezone

import numpy as np
from PIL import Image

from phenotrap.cli import main as phenotrap_main
from phenotrap_adapters.cli import main as adapters_main

T0 = datetime(2025, 2, 1, 9, 0, 0, tzinfo=timezone.utc)


def build_site(images):
    """Six frames on one camera: a dark bird in the first three (5 s apart),
    empty frames afterwards (minutes apart); green cover grows frame to
    frame so the greenness series has a trend to fit."""
    images.mkdir(parents=True)
    for i in range(6):
        ts = T0 + (timedelta(seconds=5 * i) if i < 3 else timedelta(minutes=10 + i))
        img = np.full((60, 80, 3), 200, dtype=np.uint8)
        img[60 - 3 * (i + 1) :, :] = (0, 255, 0)  # bottom rows sit in the stub's near field
        if i < 3:
            img[20:35, 30:42] = (25, 25, 35)
        Image.fromarray(img).save(images / f"CAM01_{ts.strftime('%Y%m%dT%H%M%S')}.png")


def test_adapter_chain_through_analysis_cli(tmp_path, capsys):
    images = tmp_path / "images"
    build_site(images)

    det = tmp_path / "det.jsonl"
    cls = tmp_path / "cls.jsonl"
    assert adapters_main(["depth", "--images", str(images), "--out", str(images)]) == 0
    assert adapters_main(["detect", "--images", str(images), "--out", str(det), "--prompt", "bird"]) == 0
    assert adapters_main(["taxon", "--detections", str(det), "--images", str(images), "--out", str(cls)]) == 0

    out = tmp_path / "analysis"
    code = phenotrap_main(
        ["visits", "--detections", str(det), "--classifier", str(cls), "--out", str(out)]
    )
    assert code == 0
    with open(out / "visits.csv", newline="") as fh:
        visits = list(csv.DictReader(fh))
    assert len(visits) == 1  # the three 5 s frames stitch into one visit
    assert visits[0]["n_frames"] == "3"
    assert visits[0]["species"] == "bird"

    # the depth exports pair up for the greenness command too
    g_out = tmp_path / "greenness"
    config = tmp_path / "site.yaml"
    config.write_text("defaults:\n  dbscan: {eps: 3.0, min_pts: 1}\n  degrees: {greenness: 1}\n")
    code = phenotrap_main(
        ["greenness", "--config", str(config), "--images", str(images), "--out", str(g_out)]
    )
    assert code == 0
    with open(g_out / "greenness_series.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
