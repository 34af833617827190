"""Model backends behind a minimal protocol.

Three roles: depth (image -> per-pixel meters), detector (image + prompt
-> boxes), taxon (crop -> class name + optional embedding). Every role
ships a deterministic ``stub`` backend that needs no weights: stubs key
off image content only, so fixture scenes produce predictable output and
repeated runs are byte-identical. The real wrappers are thin and load
lazily; they require the optional model dependencies and downloaded
weights.
"""

from __future__ import annotations

import zlib
from collections import deque

import numpy as np

STUB_VERSION = "stub-1.0"


def _content_seed(image: np.ndarray, salt: int) -> int:
    return zlib.crc32(np.ascontiguousarray(image).tobytes()) ^ salt


# -- stubs -------------------------------------------------------------------


class StubDepth:
    """Vertical depth ramp, slightly modulated by brightness.

    Bottom of frame reads near (~0.7 m), top far (~4 m); bright pixels
    read marginally nearer. Enough structure to exercise foreground
    thresholds without any model.
    """

    name = "stub-depth"
    version = STUB_VERSION

    def predict_depth(self, image: np.ndarray) -> np.ndarray:
        h, w = image.shape[:2]
        rows = np.linspace(4.0, 0.7, h)[:, None]
        brightness = image.mean(axis=2) / 255.0
        return np.broadcast_to(rows, (h, w)) - 0.2 * brightness


class StubDetector:
    """Blob finder posing as a detector.

    Marks pixels deviating strongly from the image median, groups them
    4-connected, and boxes blobs above a small area floor. Confidence
    grows with blob area. Deterministic in the image content.
    """

    name = "stub-detector"
    version = STUB_VERSION

    def __init__(self, contrast: float = 60.0, min_area: int = 25):
        self.contrast = contrast
        self.min_area = min_area

    def detect(self, image: np.ndarray, prompt: str):
        gray = image.mean(axis=2)
        mask = np.abs(gray - np.median(gray)) > self.contrast
        boxes = []
        seen = np.zeros(mask.shape, bool)
        h, w = mask.shape
        for y in range(h):
            for x in range(w):
                if not mask[y, x] or seen[y, x]:
                    continue
                queue = deque([(y, x)])
                seen[y, x] = True
                ys, xs = [], []
                while queue:
                    cy, cx = queue.popleft()
                    ys.append(cy)
                    xs.append(cx)
                    for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((ny, nx))
                area = len(ys)
                if area >= self.min_area:
                    boxes.append(
                        {
                            "bbox": [float(min(xs)), float(min(ys)), float(max(xs) + 1), float(max(ys) + 1)],
                            "confidence": round(min(0.95, 0.30 + area / 2000.0), 4),
                            "label": prompt,
                        }
                    )
        return boxes


class StubTaxon:
    """Color-rule classifier with a seeded 512-d embedding.

    Green-dominant crops read as Plantae, dark crops as Aves, the rest as
    Mammalia; embeddings are reproducible functions of crop content and
    the configured seed.
    """

    name = "stub-taxon"
    version = STUB_VERSION
    embedding_dim = 512

    def __init__(self, seed: int = 0):
        self.seed = seed

    def classify(self, crop: np.ndarray) -> str:
        mean = crop.reshape(-1, 3).mean(axis=0)
        if mean[1] > mean[0] and mean[1] > mean[2]:
            return "Plantae"
        if mean.mean() < 100.0:
            return "Aves"
        return "Mammalia"

    def embed(self, crop: np.ndarray):
        rng = np.random.default_rng(_content_seed(crop, self.seed))
        return rng.standard_normal(self.embedding_dim).round(6).tolist()


# -- real model wrappers (lazy, optional) ------------------------------------


def _require(module_names, purpose):
    import importlib

    missing = []
    for name in module_names:
        try:
            importlib.import_module(name)
        except ImportError:
            missing.append(name)
    if missing:
        raise RuntimeError(
            f"{purpose} requires {', '.join(missing)}; install the adapter 'models' extra "
            "and ensure weights are available"
        )


class DepthProBackend:
    name = "depth-pro"

    def __init__(self, model_id: str = "apple/DepthPro-hf"):
        _require(["torch", "transformers"], "depth estimation")
        import torch
        from transformers import AutoModelForDepthEstimation, AutoProcessor

        self.version = model_id
        self._torch = torch
        self._processor = AutoProcessor.from_pretrained(model_id)
        self._model = AutoModelForDepthEstimation.from_pretrained(model_id)
        self._model.eval()

    def predict_depth(self, image: np.ndarray) -> np.ndarray:
        from PIL import Image

        pil = Image.fromarray(image)
        inputs = self._processor(images=pil, return_tensors="pt")
        with self._torch.no_grad():
            outputs = self._model(**inputs)
        post = self._processor.post_process_depth_estimation(outputs, target_sizes=[pil.size[::-1]])
        return post[0]["predicted_depth"].cpu().numpy().astype(np.float64)


class Owlv2Backend:
    name = "owlv2"

    def __init__(self, model_id: str = "google/owlv2-base-patch16-ensemble"):
        _require(["torch", "transformers"], "zero-shot detection")
        import torch
        from transformers import Owlv2ForObjectDetection, Owlv2Processor

        self.version = model_id
        self._torch = torch
        self._processor = Owlv2Processor.from_pretrained(model_id)
        self._model = Owlv2ForObjectDetection.from_pretrained(model_id)
        self._model.eval()

    def detect(self, image: np.ndarray, prompt: str):
        from PIL import Image

        pil = Image.fromarray(image)
        inputs = self._processor(text=[[prompt]], images=pil, return_tensors="pt")
        with self._torch.no_grad():
            outputs = self._model(**inputs)
        target = self._torch.tensor([pil.size[::-1]])
        (res,) = self._processor.post_process_object_detection(outputs, threshold=0.0, target_sizes=target)
        return [
            {"bbox": [float(v) for v in box.tolist()], "confidence": float(score), "label": prompt}
            for box, score in zip(res["boxes"], res["scores"])
        ]


class GroundingDinoBackend:
    name = "grounding-dino"

    def __init__(self, model_id: str = "IDEA-Research/grounding-dino-tiny"):
        _require(["torch", "transformers"], "zero-shot detection")
        import torch
        from transformers import AutoProcessor, GroundingDinoForObjectDetection

        self.version = model_id
        self._torch = torch
        self._processor = AutoProcessor.from_pretrained(model_id)
        self._model = GroundingDinoForObjectDetection.from_pretrained(model_id)
        self._model.eval()

    def detect(self, image: np.ndarray, prompt: str):
        from PIL import Image

        pil = Image.fromarray(image)
        text = prompt if prompt.endswith(".") else prompt + "."
        inputs = self._processor(images=pil, text=text, return_tensors="pt")
        with self._torch.no_grad():
            outputs = self._model(**inputs)
        (res,) = self._processor.post_process_grounded_object_detection(
            outputs, inputs.input_ids, threshold=0.0, text_threshold=0.0, target_sizes=[pil.size[::-1]]
        )
        return [
            {"bbox": [float(v) for v in box.tolist()], "confidence": float(score), "label": prompt}
            for box, score in zip(res["boxes"], res["scores"])
        ]


class BioClipBackend:
    name = "bioclip"
    embedding_dim = 512

    def __init__(self):
        _require(["bioclip"], "taxonomic classification")
        from bioclip import Rank, TreeOfLifeClassifier

        self.version = "bioclip-tree-of-life"
        self._classifier = TreeOfLifeClassifier()
        self._rank = Rank.CLASS

    def classify(self, crop: np.ndarray) -> str:
        from PIL import Image

        preds = self._classifier.predict(Image.fromarray(crop), rank=self._rank)
        return preds[0]["class"] if preds else None

    def embed(self, crop: np.ndarray):
        from PIL import Image

        emb = self._classifier.create_image_features_for_image(Image.fromarray(crop), normalize=True)
        return [float(v) for v in emb.tolist()]


DEPTH_BACKENDS = {"stub": StubDepth, "depth-pro": DepthProBackend}
DETECTOR_BACKENDS = {
    "stub": StubDetector,
    "owlv2": Owlv2Backend,
    "grounding-dino": GroundingDinoBackend,
}
TAXON_BACKENDS = {"stub": StubTaxon, "bioclip": BioClipBackend}


def make_backend(registry, name):
    try:
        factory = registry[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(registry)}") from None
    return factory()
