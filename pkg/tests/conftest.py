import json
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from PIL import Image

from phenotrap.ingest import save_depth

T0 = datetime(2025, 1, 27, 8, 0, 0, tzinfo=timezone.utc)

GREEN = (0, 255, 0)
GRAY = (128, 128, 128)
RED = (220, 30, 30)
BG_GREEN = (40, 120, 40)


def frame_name(camera, ts):
    return f"{camera}_{ts.strftime('%Y%m%dT%H%M%S')}.png"


def write_image(path, arr):
    Image.fromarray(arr.astype(np.uint8)).save(path)


def green_fraction_image(fraction, size=10):
    """Gray image with the top rows recolored pure green; fraction exact."""
    img = np.zeros((size, size, 3), dtype=np.uint8)
    img[:, :] = GRAY
    rows = round(fraction * size)
    img[:rows, :] = GREEN
    return img


def disk_image(n_disks, shape=(300, 420), radius=6):
    img = np.zeros(shape + (3,), dtype=np.uint8)
    img[:, :] = BG_GREEN
    positions = [(60 + 90 * (i % 4), 60 + 90 * (i // 4)) for i in range(n_disks)]
    yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
    for cx, cy in positions:
        img[(xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius] = RED
    return img


@pytest.fixture
def greenness_dataset(tmp_path):
    """Three frames, one per day, exact green fractions 0.2 / 0.5 / 0.8."""
    images = tmp_path / "images"
    images.mkdir()
    fractions = [0.2, 0.5, 0.8]
    for day, frac in enumerate(fractions):
        ts = T0 + timedelta(days=day)
        name = frame_name("CAM01", ts)
        write_image(images / name, green_fraction_image(frac))
        save_depth(images / (name.rsplit(".", 1)[0] + ".depth.png"), np.full((10, 10), 1.0))
    config = tmp_path / "site.yaml"
    config.write_text(
        "defaults:\n"
        "  dbscan: {eps: 2.0, min_pts: 1}\n"
        "  degrees: {greenness: 1, berries: 1}\n"
    )
    return {"images": images, "config": config, "fractions": fractions}


@pytest.fixture
def berry_dataset(tmp_path):
    """Three frames with 4 / 2 / 1 disks across three days."""
    images = tmp_path / "images"
    images.mkdir()
    counts = [4, 2, 1]
    for day, n in enumerate(counts):
        ts = T0 + timedelta(days=day)
        write_image(images / frame_name("CAM01", ts), disk_image(n))
    config = tmp_path / "site.yaml"
    config.write_text(
        "defaults:\n"
        "  dbscan: {eps: 2.0, min_pts: 1}\n"
        "  degrees: {greenness: 1, berries: 1}\n"
    )
    return {"images": images, "config": config, "counts": counts}


def detection_line(image, ts, detections, camera="CAM01", detector="owlv2"):
    return json.dumps(
        {
            "image": image,
            "camera_id": camera,
            "timestamp": ts.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "detector": detector,
            "detections": detections,
        }
    )


@pytest.fixture
def detections_file(tmp_path):
    """Detections at 0 / 10 / 30 s: the canonical two-visit fixture."""
    path = tmp_path / "detections.jsonl"
    det = {"bbox": [10, 10, 60, 60], "confidence": 0.9, "label": "bird", "taxon_class": None}
    lines = [
        detection_line("a.png", T0, [det]),
        detection_line("b.png", T0 + timedelta(seconds=10), [det]),
        detection_line("c.png", T0 + timedelta(seconds=30), [det]),
    ]
    path.write_text("\n".join(lines) + "\n")
    return path
