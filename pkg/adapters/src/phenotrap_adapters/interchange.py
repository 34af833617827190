"""Writers for the analysis toolkit's file contracts.

Deliberately self-contained: adapters run wherever the models run, which
need not have the analysis package installed. The contracts are small --
one JSON object per image for detections, 16-bit millimeter PNGs for
depth -- and re-stating them here keeps the two sides decoupled.
"""

from __future__ import annotations

import json
import re
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

DEFAULT_FILENAME_PATTERN = r"(?P<camera_id>[A-Za-z0-9-]+)_(?P<timestamp>\d{8}T\d{6})"
DEFAULT_TIMESTAMP_FORMAT = "%Y%m%dT%H%M%S"

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


def list_images(image_dir):
    root = Path(image_dir)
    return sorted(
        p
        for p in root.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES and not p.name.endswith(".depth.png")
    )


def list_non_images(image_dir):
    root = Path(image_dir)
    return sorted(
        p.name
        for p in root.iterdir()
        if p.is_file() and (p.suffix.lower() not in IMAGE_SUFFIXES or p.name.endswith(".depth.png"))
    )


def read_image(path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from None


def parse_frame_name(filename, pattern=DEFAULT_FILENAME_PATTERN, timestamp_format=DEFAULT_TIMESTAMP_FORMAT):
    m = re.search(pattern, Path(filename).name)
    if not m:
        raise ValueError(f"filename {filename!r} does not match pattern {pattern!r}")
    ts = datetime.strptime(m.group("timestamp"), timestamp_format).replace(tzinfo=timezone.utc)
    return m.group("camera_id"), ts


def detection_record(image_path, camera_id, timestamp, detector, detections) -> str:
    """One interchange line: bbox [x_min, y_min, x_max, y_max] in pixels."""
    obj = {
        "image": str(image_path),
        "camera_id": camera_id,
        "timestamp": timestamp.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "detector": detector,
        "detections": [
            {
                "bbox": [float(v) for v in det["bbox"]],
                "confidence": float(det["confidence"]),
                "label": str(det["label"]),
                "taxon_class": det.get("taxon_class"),
            }
            for det in detections
        ],
    }
    return json.dumps(obj, sort_keys=True)


def read_detection_lines(path):
    """Parse an interchange file into plain dicts, line-numbered."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append((lineno, json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: not valid JSON ({exc.msg})") from None
    return out


def write_depth_png(path, depth_m: np.ndarray, meters_per_unit: float = 0.001):
    """Depth in meters -> 16-bit PNG in the paired-basename convention."""
    depth_m = np.asarray(depth_m, dtype=np.float64)
    validity = np.isfinite(depth_m) & (depth_m > 0)
    units = np.zeros(depth_m.shape, dtype=np.uint16)
    scaled = np.clip(np.round(depth_m / meters_per_unit), 1, 65535)
    units[validity] = scaled[validity].astype(np.uint16)
    Image.fromarray(units).save(path)


def depth_name_for(image_path) -> str:
    return Path(image_path).stem + ".depth.png"
