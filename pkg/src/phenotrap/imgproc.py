"""Pixel-level primitives: color conversion, thresholding, binary morphology,
connected components, and box geometry.

Images are numpy arrays: RGB images are ``(H, W, 3)`` uint8, masks are
``(H, W)`` bool. All functions are pure; nothing here touches disk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = [
    "Box",
    "Component",
    "srgb_to_lab",
    "srgb_to_hsv",
    "threshold",
    "binary_erode",
    "binary_dilate",
    "morph_open",
    "morph_close",
    "connected_components",
    "iou",
]

# sRGB -> XYZ matrix (IEC 61966-2-1, D65 white)
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
# white point taken from the matrix itself so white maps to exactly
# (100, 0, 0) and L never exceeds 100
_D65 = _SRGB_TO_XYZ.sum(axis=1)

# 8-bit linearization LUT; rebuilt lazily so import stays cheap
_LINEAR_LUT = None


@dataclass(frozen=True)
class Box:
    """Axis-aligned box on half-open pixel rectangles: [x_min, x_max) x [y_min, y_max)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"invalid box: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def union(self, other: "Box") -> "Box":
        return Box(
            min(self.x_min, other.x_min),
            min(self.y_min, other.y_min),
            max(self.x_max, other.x_max),
            max(self.y_max, other.y_max),
        )

    def contains_point(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class Component:
    """One connected blob of true pixels."""

    area: int
    centroid: tuple  # (x, y), sub-pixel
    bbox: Box


def _as_float_rgb(rgb):
    arr = np.asarray(rgb)
    if arr.shape[-1] != 3:
        raise ValueError("expected trailing dimension of 3 (RGB)")
    return arr


def srgb_to_lab(rgb):
    """Convert 8-bit sRGB to CIELAB (D65 white point).

    Accepts a single ``(r, g, b)`` triple or any ``(..., 3)`` array of
    uint8 values; returns float64 of the same shape with channels
    ``(L, a, b)``. L is in [0, 100]; a < 0 means green chromaticity.
    """
    global _LINEAR_LUT
    arr = _as_float_rgb(rgb)
    if _LINEAR_LUT is None:
        c = np.arange(256) / 255.0
        _LINEAR_LUT = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    linear = _LINEAR_LUT[np.asarray(arr, dtype=np.uint8)]
    xyz = linear @ _SRGB_TO_XYZ.T / _D65

    d3 = (6.0 / 29.0) ** 3
    f = np.where(xyz > d3, np.cbrt(xyz), xyz / (3 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    out = np.empty(arr.shape, dtype=np.float64)
    out[..., 0] = 116.0 * fy - 16.0
    out[..., 1] = 500.0 * (fx - fy)
    out[..., 2] = 200.0 * (fy - fz)
    return out


def srgb_to_hsv(rgb):
    """Convert 8-bit sRGB to hexcone HSV.

    Hue is in degrees [0, 360), saturation and value in [0, 1]. Hue of a
    zero-saturation pixel is stored as 0.
    """
    arr = _as_float_rgb(rgb).astype(np.float64) / 255.0
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    v = arr.max(axis=-1)
    c = v - arr.min(axis=-1)

    h = np.zeros_like(v)
    with np.errstate(invalid="ignore", divide="ignore"):
        rc = np.where(c > 0, (v - r) / c, 0.0)
        gc = np.where(c > 0, (v - g) / c, 0.0)
        bc = np.where(c > 0, (v - b) / c, 0.0)
    h = np.where(v == r, bc - gc, h)
    h = np.where((v == g) & (g != r), 2.0 + rc - bc, h)
    h = np.where((v == b) & (b != r) & (b != g), 4.0 + gc - rc, h)
    h = (h * 60.0) % 360.0
    h = np.where(c == 0, 0.0, h)

    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    return np.stack([h, s, v], axis=-1)


_CHANNELS = {
    "rgb": ("r", "g", "b"),
    "lab": ("l", "a", "b"),
    "hsv": ("h", "s", "v"),
}


def channel_plane(image, channel: str):
    """Extract one channel plane by a ``space.channel`` name, e.g. ``"lab.a"``."""
    try:
        space, chan = channel.lower().split(".")
        idx = _CHANNELS[space].index(chan)
    except (ValueError, KeyError):
        raise ValueError(f"unknown channel selector {channel!r}") from None
    if space == "rgb":
        converted = np.asarray(image, dtype=np.float64)
    elif space == "lab":
        converted = srgb_to_lab(image)
    else:
        converted = srgb_to_hsv(image)
    return converted[..., idx]


def threshold(image, channel: str, intervals) -> np.ndarray:
    """Mask pixels whose channel value falls in a union of closed intervals.

    ``intervals`` is one ``(lo, hi)`` pair or a sequence of pairs. An empty
    predicate (no intervals, or every interval with lo > hi) is an error.
    """
    if intervals and np.isscalar(intervals[0]):
        intervals = [intervals]
    intervals = [(float(lo), float(hi)) for lo, hi in intervals]
    intervals = [(lo, hi) for lo, hi in intervals if lo <= hi]
    if not intervals:
        raise ValueError("degenerate threshold: empty predicate")
    plane = channel_plane(image, channel)
    mask = np.zeros(plane.shape, dtype=bool)
    for lo, hi in intervals:
        mask |= (plane >= lo) & (plane <= hi)
    return mask


def _square(side: int) -> np.ndarray:
    if side < 1 or side % 2 == 0:
        raise ValueError(f"kernel side must be odd and >= 1, got {side}")
    return np.ones((side, side), dtype=bool)


def binary_erode(mask: np.ndarray, kernel: int = 3) -> np.ndarray:
    """Erode with a square structuring element.

    The mask's domain ends at the image border: the part of the element
    hanging outside imposes no requirement (border_value=1), so an all-true
    mask is a fixed point.
    """
    return ndimage.binary_erosion(np.asarray(mask, bool), _square(kernel), border_value=1)


def binary_dilate(mask: np.ndarray, kernel: int = 3) -> np.ndarray:
    """Dilate with a square structuring element; nothing enters from outside."""
    return ndimage.binary_dilation(np.asarray(mask, bool), _square(kernel), border_value=0)


def morph_open(mask: np.ndarray, kernel: int = 3) -> np.ndarray:
    """Erosion then dilation: removes specks smaller than the element."""
    return binary_dilate(binary_erode(mask, kernel), kernel)


def morph_close(mask: np.ndarray, kernel: int = 3) -> np.ndarray:
    """Dilation then erosion: fills holes smaller than the element."""
    return binary_erode(binary_dilate(mask, kernel), kernel)


def connected_components(mask: np.ndarray, connectivity: int = 8):
    """Partition true pixels into maximal connected blobs.

    Returns a list of Component in scanline order of each blob's first
    pixel. Centroids are means of pixel coordinates (x=column, y=row);
    bounding boxes follow the half-open convention.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    mask = np.asarray(mask, bool)
    structure = np.ones((3, 3), bool) if connectivity == 8 else ndimage.generate_binary_structure(2, 1)
    labels, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return []

    flat = labels.ravel()
    order = {}
    values, first_idx = np.unique(flat, return_index=True)
    for val, idx in zip(values, first_idx):
        if val != 0:
            order[val] = idx
    slices = ndimage.find_objects(labels)

    ys, xs = np.nonzero(mask)
    lab_at = labels[ys, xs]
    areas = np.bincount(lab_at, minlength=n + 1)
    sum_x = np.bincount(lab_at, weights=xs, minlength=n + 1)
    sum_y = np.bincount(lab_at, weights=ys, minlength=n + 1)

    comps = []
    for val in sorted(order, key=order.get):
        sl_y, sl_x = slices[val - 1]
        area = int(areas[val])
        comps.append(
            Component(
                area=area,
                centroid=(sum_x[val] / area, sum_y[val] / area),
                bbox=Box(float(sl_x.start), float(sl_y.start), float(sl_x.stop), float(sl_y.stop)),
            )
        )
    return comps


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes, in [0, 1].

    Zero-area boxes: identical -> 1.0, otherwise 0.0 (keeps the metric
    total; real detections are validated to have positive area).
    """
    if a.area == 0 and b.area == 0:
        return 1.0 if a == b else 0.0
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)
