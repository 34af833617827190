"""phenotrap: camera-trap phenology and animal-visitation analysis.

Turns irregular camera-trap image sequences plus externally produced depth
maps and detection records into phenology time series (canopy greenness,
berry counts), fitted trends, and visitation statistics.

Submodules:

- ``imgproc``    pixel primitives: color spaces, thresholds, morphology,
  connected components, box IoU
- ``phenology``  per-frame metrics: depth-gated greenness, berry detection
- ``series``     DBSCAN outlier rejection, polynomial trends, R-squared
- ``visits``     detection interchange, filters, visit stitching, daily counts
- ``evaluation`` detection scoring (precision/recall/F1) and chi-square test
- ``ingest``     images, depth PNGs, filename metadata
- ``config``     site YAML with per-camera overrides
- ``svgplot``    deterministic SVG figures
- ``cli``        the ``phenotrap`` command
"""

from .imgproc import Box, Component, connected_components, iou, morph_close, morph_open, srgb_to_hsv, srgb_to_lab, threshold
from .phenology import (
    BerryConfig,
    BerryDetection,
    DepthMap,
    Frame,
    GreennessConfig,
    HueWindow,
    detect_berries,
    extract_foreground,
    greenness_score,
)
from .series import NOISE, DbscanParams, SeriesPoint, TrendFit, dbscan, fit_trend, polyfit, polyval, r_squared
from .visits import (
    DailyCount,
    DetectionEntry,
    DetectionRecord,
    Visit,
    VisitConfig,
    daily_counts,
    filter_confidence,
    filter_taxon,
    load_detections,
    run_pipeline,
    stitch_visits,
    suppress_static,
)
from .evaluation import ContingencyTable, MatchResult, PrfScores, chi_square, match_detections, prf

__version__ = "0.1.0"

__all__ = [
    "Box",
    "Component",
    "connected_components",
    "iou",
    "morph_close",
    "morph_open",
    "srgb_to_hsv",
    "srgb_to_lab",
    "threshold",
    "BerryConfig",
    "BerryDetection",
    "DepthMap",
    "Frame",
    "GreennessConfig",
    "HueWindow",
    "detect_berries",
    "extract_foreground",
    "greenness_score",
    "NOISE",
    "DbscanParams",
    "SeriesPoint",
    "TrendFit",
    "dbscan",
    "fit_trend",
    "polyfit",
    "polyval",
    "r_squared",
    "DailyCount",
    "DetectionEntry",
    "DetectionRecord",
    "Visit",
    "VisitConfig",
    "daily_counts",
    "filter_confidence",
    "filter_taxon",
    "load_detections",
    "run_pipeline",
    "stitch_visits",
    "suppress_static",
    "ContingencyTable",
    "MatchResult",
    "PrfScores",
    "chi_square",
    "match_detections",
    "prf",
]
