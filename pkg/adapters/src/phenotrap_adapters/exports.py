"""The three batch exports: depth PNGs, detection records, taxon labels.

Each writes its manifest alongside the export. Per-image inference
failures never abort a batch; the image lands in the manifest's
``failed`` section instead. All science-side filtering (taxon keep-lists,
visit stitching, confidence cuts beyond the recorded floor) stays in the
analysis toolkit so that swapping a model cannot change analysis
semantics.
"""

from __future__ import annotations

import json
from pathlib import Path

from .interchange import (
    DEFAULT_FILENAME_PATTERN,
    DEFAULT_TIMESTAMP_FORMAT,
    depth_name_for,
    detection_record,
    list_images,
    list_non_images,
    parse_frame_name,
    read_detection_lines,
    read_image,
    write_depth_png,
)
from .manifest import AdapterManifest

__all__ = ["export_depth", "export_detections", "export_taxon"]


def export_depth(image_dir, out_dir, backend, manifest_name="depth_manifest.json"):
    """One 16-bit millimeter depth PNG per image, basename-paired."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = AdapterManifest(model=backend.name, version=backend.version, seed=getattr(backend, "seed", None))
    manifest.skipped = list_non_images(image_dir)
    for path in list_images(image_dir):
        try:
            depth = backend.predict_depth(read_image(path))
            target = out_dir / depth_name_for(path)
            write_depth_png(target, depth)
        except Exception as exc:
            manifest.failed.append(f"{path.name}: {exc}")
            continue
        manifest.processed.append(path.name)
        manifest.outputs.append(target.name)
    manifest_path = out_dir / manifest_name
    manifest.write(manifest_path)
    return manifest_path


def export_detections(
    image_dir,
    out_file,
    backend,
    prompt: str = "bird",
    confidence_floor: float = 0.0,
    pattern: str = DEFAULT_FILENAME_PATTERN,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
):
    """One interchange line per image; confidences floored as recorded."""
    out_file = Path(out_file)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    manifest = AdapterManifest(
        model=backend.name,
        version=backend.version,
        prompt=prompt,
        confidence_floor=confidence_floor,
        seed=getattr(backend, "seed", None),
        outputs=[out_file.name],
    )
    manifest.skipped = list_non_images(image_dir)
    lines = []
    for path in list_images(image_dir):
        try:
            camera_id, ts = parse_frame_name(path, pattern, timestamp_format)
            detections = [
                d for d in backend.detect(read_image(path), prompt) if d["confidence"] >= confidence_floor
            ]
            lines.append(detection_record(path.name, camera_id, ts, backend.name, detections))
        except Exception as exc:
            manifest.failed.append(f"{path.name}: {exc}")
            continue
        manifest.processed.append(path.name)
    out_file.write_text("".join(line + "\n" for line in lines))
    manifest_path = out_file.with_name(out_file.stem + "_manifest.json")
    manifest.write(manifest_path)
    return manifest_path


def export_taxon(detections_file, image_dir, out_file, backend, embeddings: bool = False):
    """Fill taxon_class per detection by classifying its crop.

    Unreadable or degenerate crops leave taxon_class unset and are
    counted in the manifest's failed section. With ``embeddings=True`` a
    sidecar JSONL of per-detection feature vectors is written for future
    work; nothing downstream consumes it.
    """
    image_dir = Path(image_dir)
    out_file = Path(out_file)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    manifest = AdapterManifest(
        model=backend.name,
        version=backend.version,
        seed=getattr(backend, "seed", None),
        outputs=[out_file.name],
    )

    out_lines = []
    sidecar_lines = []
    for lineno, obj in read_detection_lines(detections_file):
        image_name = obj.get("image", "")
        arr = None
        try:
            arr = read_image(image_dir / image_name)
        except ValueError as exc:
            manifest.failed.append(f"{image_name}: {exc}")
        for di, det in enumerate(obj.get("detections", [])):
            if arr is None:
                continue
            x0, y0, x1, y1 = (int(round(v)) for v in det["bbox"])
            crop = arr[max(y0, 0) : max(y1, 0), max(x0, 0) : max(x1, 0)]
            if crop.size == 0:
                manifest.failed.append(f"{image_name}[{di}]: empty crop")
                continue
            det["taxon_class"] = backend.classify(crop)
            if embeddings:
                sidecar_lines.append(
                    json.dumps(
                        {"image": image_name, "index": di, "embedding": backend.embed(crop)},
                        sort_keys=True,
                    )
                )
        out_lines.append(json.dumps(obj, sort_keys=True))
        manifest.processed.append(image_name)

    out_file.write_text("".join(line + "\n" for line in out_lines))
    if embeddings:
        sidecar = out_file.with_name(out_file.stem + "_embeddings.jsonl")
        sidecar.write_text("".join(line + "\n" for line in sidecar_lines))
        manifest.outputs.append(sidecar.name)
    manifest_path = out_file.with_name(out_file.stem + "_manifest.json")
    manifest.write(manifest_path)
    return manifest_path
