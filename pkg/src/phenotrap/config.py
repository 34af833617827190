"""Site configuration: one YAML file, a ``defaults`` section, and optional
per-camera overrides.

Depth cuts and color thresholds vary plant to plant (lighting, distance),
so every tunable can be overridden under ``cameras.<camera_id>``.

Example::

    defaults:
      greenness: {max_depth_m: 2.0}
      degrees: {greenness: 3, berries: 2}
    cameras:
      CAM02:
        greenness: {max_depth_m: 1.4}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .ingest import DEFAULT_FILENAME_PATTERN, DEFAULT_TIMESTAMP_FORMAT
from .phenology import BerryConfig, GreennessConfig, HueWindow
from .series import DbscanParams
from .visits import VisitConfig

__all__ = ["CameraSettings", "SiteConfig", "load_config"]

DEFAULT_DEGREES = {"greenness": 3, "berries": 2}


@dataclass(frozen=True)
class CameraSettings:
    """Fully resolved settings for one camera."""

    greenness: GreennessConfig = field(default=GreennessConfig())
    berries: BerryConfig = field(default=BerryConfig())
    dbscan: DbscanParams = field(default=DbscanParams())
    visits: VisitConfig = field(default=VisitConfig())
    degrees: dict = field(default_factory=lambda: dict(DEFAULT_DEGREES))
    filename_pattern: str = DEFAULT_FILENAME_PATTERN
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT


@dataclass(frozen=True)
class SiteConfig:
    defaults: dict = field(default_factory=dict)
    cameras: dict = field(default_factory=dict)

    def for_camera(self, camera_id: str) -> CameraSettings:
        merged = _merge(self.defaults, self.cameras.get(camera_id, {}))
        return _settings_from_dict(merged)


def load_config(path=None) -> SiteConfig:
    """Load a site YAML; a missing path yields all defaults."""
    if path is None:
        return SiteConfig()
    raw = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a mapping")
    defaults = raw.get("defaults", {}) or {}
    cameras = raw.get("cameras", {}) or {}
    unknown = set(raw) - {"defaults", "cameras"}
    if unknown:
        raise ValueError(f"config {path}: unknown top-level keys {sorted(unknown)}")
    # validate every section eagerly so bad values fail at load time
    cfg = SiteConfig(defaults=defaults, cameras=cameras)
    _settings_from_dict(defaults)
    for cam in cameras:
        cfg.for_camera(cam)
    return cfg


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _hue_window(obj, fallback: HueWindow) -> HueWindow:
    if obj is None:
        return fallback
    lo, hi = obj.get("h", [fallback.h_lo, fallback.h_hi])
    return HueWindow(
        h_lo=float(lo),
        h_hi=float(hi),
        s_min=float(obj.get("s_min", fallback.s_min)),
        v_min=float(obj.get("v_min", fallback.v_min)),
    )


def _settings_from_dict(d: dict) -> CameraSettings:
    g = d.get("greenness", {}) or {}
    b = d.get("berries", {}) or {}
    db = d.get("dbscan", {}) or {}
    v = d.get("visits", {}) or {}
    base_berries = BerryConfig()
    return CameraSettings(
        greenness=GreennessConfig(
            max_depth_m=float(g.get("max_depth_m", 2.0)),
            green_a_max=float(g.get("green_a_max", -8.0)),
            min_foreground_fraction=float(g.get("min_foreground_fraction", 0.01)),
        ),
        berries=BerryConfig(
            hsv_red_low=_hue_window(b.get("hsv_red_low"), base_berries.hsv_red_low),
            hsv_red_high=_hue_window(b.get("hsv_red_high"), base_berries.hsv_red_high),
            lab_a_min=float(b.get("lab_a_min", base_berries.lab_a_min)),
            min_area_px2=int(b.get("min_area_px2", base_berries.min_area_px2)),
            centroid_match_px=float(b.get("centroid_match_px", base_berries.centroid_match_px)),
            morph_kernel=int(b.get("morph_kernel", base_berries.morph_kernel)),
        ),
        dbscan=DbscanParams(
            eps=float(db.get("eps", 0.5)),
            min_pts=int(db.get("min_pts", 5)),
        ),
        visits=VisitConfig(
            confidence_min=float(v.get("confidence_min", 0.2)),
            static_iou=float(v.get("static_iou", 0.75)),
            static_run=int(v.get("static_run", 5)),
            stitch_gap_s=float(v.get("stitch_gap_s", 15.0)),
            taxon_keep=frozenset(v.get("taxon_keep", ["Aves"])),
        ),
        degrees={**DEFAULT_DEGREES, **(d.get("degrees", {}) or {})},
        filename_pattern=d.get("filename_pattern", DEFAULT_FILENAME_PATTERN),
        timestamp_format=d.get("timestamp_format", DEFAULT_TIMESTAMP_FORMAT),
    )
