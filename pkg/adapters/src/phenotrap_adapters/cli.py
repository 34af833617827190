"""Adapter batch commands: ``depth``, ``detect``, ``taxon``."""

from __future__ import annotations

import argparse
import sys

from .backends import DEPTH_BACKENDS, DETECTOR_BACKENDS, TAXON_BACKENDS, StubTaxon, make_backend
from .exports import export_depth, export_detections, export_taxon
from .interchange import DEFAULT_FILENAME_PATTERN, DEFAULT_TIMESTAMP_FORMAT


def build_parser():
    parser = argparse.ArgumentParser(prog="phenotrap-adapters", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("depth", help="export per-image depth PNGs")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True, help="output directory for depth PNGs + manifest")
    p.add_argument("--backend", default="stub", choices=sorted(DEPTH_BACKENDS))

    p = sub.add_parser("detect", help="export detection records")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True, help="interchange file to write")
    p.add_argument("--backend", default="stub", choices=sorted(DETECTOR_BACKENDS))
    p.add_argument("--prompt", default="bird")
    p.add_argument("--floor", type=float, default=0.0, help="confidence floor applied at export")
    p.add_argument("--pattern", default=DEFAULT_FILENAME_PATTERN)
    p.add_argument("--timestamp-format", default=DEFAULT_TIMESTAMP_FORMAT)

    p = sub.add_parser("taxon", help="fill taxon_class on an interchange file")
    p.add_argument("--detections", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True, help="interchange file to write")
    p.add_argument("--backend", default="stub", choices=sorted(TAXON_BACKENDS))
    p.add_argument("--seed", type=int, default=0, help="embedding seed for the stub backend")
    p.add_argument("--embeddings", action="store_true", help="write a feature-vector sidecar")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "depth":
            path = export_depth(args.images, args.out, make_backend(DEPTH_BACKENDS, args.backend))
        elif args.command == "detect":
            path = export_detections(
                args.images,
                args.out,
                make_backend(DETECTOR_BACKENDS, args.backend),
                prompt=args.prompt,
                confidence_floor=args.floor,
                pattern=args.pattern,
                timestamp_format=args.timestamp_format,
            )
        else:
            backend = StubTaxon(seed=args.seed) if args.backend == "stub" else make_backend(TAXON_BACKENDS, args.backend)
            path = export_taxon(args.detections, args.images, args.out, backend, embeddings=args.embeddings)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"phenotrap-adapters {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(f"manifest: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
