"""Foundation-model adapters for the phenotrap analysis toolkit.

Thin batch wrappers around external models (monocular depth, zero-shot
and camera-trap detectors, a taxonomic classifier) that emit exactly the
interchange files the toolkit consumes: paired 16-bit depth PNGs and
line-oriented detection records. No analysis logic lives here.
"""

from .backends import (
    DEPTH_BACKENDS,
    DETECTOR_BACKENDS,
    TAXON_BACKENDS,
    StubDepth,
    StubDetector,
    StubTaxon,
)
from .exports import export_depth, export_detections, export_taxon
from .manifest import AdapterManifest

__version__ = "0.1.0"

__all__ = [
    "AdapterManifest",
    "DEPTH_BACKENDS",
    "DETECTOR_BACKENDS",
    "TAXON_BACKENDS",
    "StubDepth",
    "StubDetector",
    "StubTaxon",
    "export_depth",
    "export_detections",
    "export_taxon",
]
