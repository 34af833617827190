"""Per-frame phenological metrics.

Greenness: an externally produced metric depth map gates the focal plant's
foreground, and the score is the fraction of foreground pixels whose LAB
a-channel reads green. Berries: red blobs are segmented in HSV and LAB
independently, cleaned morphologically, and counted where both color
spaces agree (centroids close enough to pair).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .imgproc import (
    connected_components,
    morph_close,
    morph_open,
    srgb_to_hsv,
    srgb_to_lab,
)

__all__ = [
    "Frame",
    "DepthMap",
    "HueWindow",
    "GreennessConfig",
    "BerryConfig",
    "ForegroundResult",
    "BerryDetection",
    "extract_foreground",
    "greenness_score",
    "detect_berries",
]


@dataclass(frozen=True)
class Frame:
    """One camera-trap image plus its identity metadata."""

    camera_id: str
    timestamp: datetime
    image: np.ndarray  # (H, W, 3) uint8
    image_path: str = ""


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel metric depth aligned with a frame; invalid pixels flagged."""

    depth: np.ndarray  # (H, W) float meters
    validity: np.ndarray  # (H, W) bool

    def __post_init__(self):
        if self.depth.shape != self.validity.shape:
            raise ValueError("depth and validity shapes differ")
        valid = self.depth[self.validity]
        if valid.size and (not np.isfinite(valid).all() or (valid <= 0).any()):
            raise ValueError("valid depths must be finite and > 0")


@dataclass(frozen=True)
class HueWindow:
    """One hue interval with saturation / value floors."""

    h_lo: float
    h_hi: float
    s_min: float = 0.45
    v_min: float = 0.25

    def __post_init__(self):
        if self.h_lo > self.h_hi:
            raise ValueError("hue interval is empty")


@dataclass(frozen=True)
class GreennessConfig:
    """Per-camera greenness settings; depth cut is tuned per plant."""

    max_depth_m: float = 2.0
    green_a_max: float = -8.0  # a-channel below this counts as green
    min_foreground_fraction: float = 0.01

    def __post_init__(self):
        if self.max_depth_m <= 0:
            raise ValueError("max_depth_m must be > 0")
        if not 0.0 <= self.min_foreground_fraction <= 1.0:
            raise ValueError("min_foreground_fraction must be in [0, 1]")


@dataclass(frozen=True)
class BerryConfig:
    """Dual red-hue windows plus LAB red floor and blob constraints.

    Red wraps around the hue circle, hence one window near 0 and one near
    360 degrees.
    """

    hsv_red_low: HueWindow = field(default=HueWindow(0.0, 15.0))
    hsv_red_high: HueWindow = field(default=HueWindow(345.0, 360.0))
    lab_a_min: float = 25.0
    min_area_px2: int = 50
    centroid_match_px: float = 50.0
    morph_kernel: int = 3

    def __post_init__(self):
        if self.min_area_px2 < 1:
            raise ValueError("min_area_px2 must be >= 1")
        if self.centroid_match_px < 0:
            raise ValueError("centroid_match_px must be >= 0")


@dataclass(frozen=True)
class ForegroundResult:
    mask: np.ndarray
    fraction: float
    insufficient: bool


@dataclass(frozen=True)
class BerryDetection:
    boxes: tuple  # merged boxes, one per counted berry

    @property
    def count(self) -> int:
        return len(self.boxes)


def extract_foreground(frame: Frame, depth: DepthMap, cfg: GreennessConfig) -> ForegroundResult:
    """Mask pixels with valid depth within the per-camera cut.

    The caller is expected to drop frames flagged insufficient: a frame
    whose near field is nearly empty (or fully occluded) says nothing
    about the focal plant.
    """
    if depth.depth.shape != frame.image.shape[:2]:
        raise ValueError(
            f"depth dimensions {depth.depth.shape} do not match frame {frame.image.shape[:2]}"
        )
    mask = depth.validity & (depth.depth <= cfg.max_depth_m)
    fraction = float(mask.mean()) if mask.size else 0.0
    return ForegroundResult(mask=mask, fraction=fraction, insufficient=fraction < cfg.min_foreground_fraction)


def greenness_score(frame: Frame, foreground: np.ndarray, cfg: GreennessConfig) -> float:
    """Fraction of foreground pixels whose a-channel is below the green cut."""
    foreground = np.asarray(foreground, bool)
    n_fg = int(foreground.sum())
    if n_fg == 0:
        raise ValueError("no foreground: empty mask")
    a = srgb_to_lab(frame.image)[..., 1]
    n_green = int(((a < cfg.green_a_max) & foreground).sum())
    return n_green / n_fg


def _hue_mask(hsv, window: HueWindow):
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    return (h >= window.h_lo) & (h <= window.h_hi) & (s >= window.s_min) & (v >= window.v_min)


def detect_berries(frame: Frame, cfg: BerryConfig, foreground=None) -> BerryDetection:
    """Count red berries by agreement of HSV and LAB segmentations.

    Stages: (1) HSV mask from the union of the two red-hue windows,
    (2) LAB mask where a >= lab_a_min, (3) morphological open then close
    on each, (4) components above the area floor, (5) greedy pairing of
    HSV and LAB components by ascending centroid distance, each component
    used at most once, (6) one merged box per pair.

    ``foreground`` optionally restricts both masks to a depth-gated region;
    the default analyzes the full frame.
    """
    hsv = srgb_to_hsv(frame.image)
    hsv_mask = _hue_mask(hsv, cfg.hsv_red_low) | _hue_mask(hsv, cfg.hsv_red_high)
    lab_mask = srgb_to_lab(frame.image)[..., 1] >= cfg.lab_a_min
    if foreground is not None:
        fg = np.asarray(foreground, bool)
        hsv_mask &= fg
        lab_mask &= fg

    k = cfg.morph_kernel
    hsv_mask = morph_close(morph_open(hsv_mask, k), k)
    lab_mask = morph_close(morph_open(lab_mask, k), k)

    hsv_comps = [c for c in connected_components(hsv_mask, 8) if c.area >= cfg.min_area_px2]
    lab_comps = [c for c in connected_components(lab_mask, 8) if c.area >= cfg.min_area_px2]

    candidates = []
    for i, hc in enumerate(hsv_comps):
        for j, lc in enumerate(lab_comps):
            dist = math.dist(hc.centroid, lc.centroid)
            if dist <= cfg.centroid_match_px:
                candidates.append((dist, i, j))
    candidates.sort()  # ascending distance; ties by HSV scanline order, then LAB

    used_h, used_l = set(), set()
    boxes = []
    for dist, i, j in candidates:
        if i in used_h or j in used_l:
            continue
        used_h.add(i)
        used_l.add(j)
        boxes.append(hsv_comps[i].bbox.union(lab_comps[j].bbox))
    return BerryDetection(boxes=tuple(boxes))
