"""Dataset ingestion: images, paired depth maps, and frame metadata.

Depth maps arrive as 16-bit single-channel PNGs holding millimeters
(0 = invalid), paired with the image by basename: ``IMG_0001.jpg`` expects
``IMG_0001.depth.png`` (full-name fallback ``IMG_0001.jpg.depth.png``). An
optional JSON sidecar next to the depth file can override the unit scale.

Camera identity and capture time come from the filename, because the
low-cost cameras' EXIF is unreliable: the default pattern expects names
like ``CAM01_20250127T143055.jpg``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .phenology import DepthMap, Frame

__all__ = [
    "DEFAULT_FILENAME_PATTERN",
    "DEFAULT_TIMESTAMP_FORMAT",
    "FrameSource",
    "load_image",
    "load_depth",
    "save_depth",
    "depth_path_for",
    "parse_frame_name",
    "list_images",
]

DEFAULT_FILENAME_PATTERN = r"(?P<camera_id>[A-Za-z0-9-]+)_(?P<timestamp>\d{8}T\d{6})"
DEFAULT_TIMESTAMP_FORMAT = "%Y%m%dT%H%M%S"

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}
MM_PER_UNIT_DEFAULT = 0.001  # stored value -> meters


def load_image(path) -> np.ndarray:
    """Read an 8-bit RGB image; raises ValueError naming a corrupt file."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from None


def load_depth(path) -> DepthMap:
    """Read a depth PNG (+ optional sidecar) into meters with validity."""
    try:
        with Image.open(path) as img:
            raw = np.asarray(img)
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"cannot read depth map {path}: {exc}") from None
    if raw.ndim != 2:
        raise ValueError(f"depth map {path} is not single-channel")
    raw = raw.astype(np.float64)
    scale = _sidecar_scale(path)
    validity = raw > 0
    # invalid pixels hold +inf so depth comparisons stay warning-free
    depth = np.where(validity, raw * scale, np.inf)
    return DepthMap(depth=depth, validity=validity)


def _sidecar_scale(depth_path) -> float:
    sidecar = Path(str(depth_path) + ".json")
    if not sidecar.exists():
        sidecar = Path(depth_path).with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        if "meters_per_unit" in meta:
            return float(meta["meters_per_unit"])
    return MM_PER_UNIT_DEFAULT


def save_depth(path, depth_m: np.ndarray, validity=None, meters_per_unit: float = MM_PER_UNIT_DEFAULT):
    """Write meters as a 16-bit PNG in the pairing convention (0 = invalid)."""
    depth_m = np.asarray(depth_m, dtype=np.float64)
    if validity is None:
        validity = np.isfinite(depth_m) & (depth_m > 0)
    units = np.zeros(depth_m.shape, dtype=np.uint16)
    scaled = np.clip(np.round(depth_m / meters_per_unit), 1, 65535)
    units[validity] = scaled[validity].astype(np.uint16)
    Image.fromarray(units).save(path)


def depth_path_for(image_path, depth_dir=None) -> Path:
    """Locate the paired depth map; stem-based name first, full-name fallback."""
    image_path = Path(image_path)
    base = Path(depth_dir) if depth_dir is not None else image_path.parent
    stem_candidate = base / (image_path.stem + ".depth.png")
    if stem_candidate.exists():
        return stem_candidate
    return base / (image_path.name + ".depth.png")


def parse_frame_name(filename, pattern=DEFAULT_FILENAME_PATTERN, timestamp_format=DEFAULT_TIMESTAMP_FORMAT):
    """Recover (camera_id, UTC timestamp) from a frame filename."""
    m = re.search(pattern, Path(filename).name)
    if not m:
        raise ValueError(f"filename {filename!r} does not match pattern {pattern!r}")
    ts = datetime.strptime(m.group("timestamp"), timestamp_format).replace(tzinfo=timezone.utc)
    return m.group("camera_id"), ts


def list_images(image_dir):
    """Image files under a directory, sorted by name for determinism.

    Depth maps following the pairing convention may live alongside the
    frames; they are never frames themselves.
    """
    root = Path(image_dir)
    return sorted(
        p
        for p in root.iterdir()
        if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file() and not p.name.endswith(".depth.png")
    )


@dataclass(frozen=True)
class FrameSource:
    """Lazy frame loader for one directory of images."""

    image_dir: str
    pattern: str = DEFAULT_FILENAME_PATTERN
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT

    def paths(self):
        return list_images(self.image_dir)

    def load_frame(self, path) -> Frame:
        camera_id, ts = parse_frame_name(path, self.pattern, self.timestamp_format)
        return Frame(camera_id=camera_id, timestamp=ts, image=load_image(path), image_path=str(path))
