"""Export manifests: what model ran, with what prompt and floor, over what."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass
class AdapterManifest:
    """Written alongside every export; the prompt is recorded verbatim."""

    model: str
    version: str
    prompt: str | None = None
    confidence_floor: float = 0.0
    seed: int | None = None
    outputs: list = field(default_factory=list)
    processed: list = field(default_factory=list)
    skipped: list = field(default_factory=list)  # non-image files etc.
    failed: list = field(default_factory=list)  # inference failures

    def write(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))
