"""Trend extraction from noisy per-frame metric series.

A series is a list of SeriesPoint (fractional days since the series start,
metric value). Cleaning and fitting follow a fixed recipe: DBSCAN in the
z-normalized (t, value) plane flags outliers as noise, a least-squares
polynomial is fit to the inliers, and R-squared reports goodness of fit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np
from numpy.polynomial import Polynomial

from .timeutil import format_utc, parse_utc

__all__ = [
    "NOISE",
    "SeriesPoint",
    "DbscanParams",
    "TrendFit",
    "dbscan",
    "polyfit",
    "polyval",
    "r_squared",
    "fit_trend",
    "points_from_observations",
    "write_series_csv",
    "read_series_csv",
]

NOISE = -1
_UNSEEN = -2

SERIES_CSV_COLUMNS = ["timestamp", "value", "camera_id", "metric", "inlier"]


@dataclass(frozen=True)
class SeriesPoint:
    t: float  # days since series start
    value: float
    frame_ref: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.value)):
            raise ValueError(f"series point must be finite, got t={self.t} value={self.value}")


@dataclass(frozen=True)
class DbscanParams:
    """Neighborhood radius and core-point threshold.

    eps applies after per-axis z-normalization, so one setting behaves
    comparably across metrics with different units.
    """

    eps: float = 0.5
    min_pts: int = 5

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")


@dataclass(frozen=True)
class TrendFit:
    degree: int
    coefficients: tuple  # ascending powers of t (days)
    r_squared: float
    inlier_count: int
    outlier_count: int
    params: DbscanParams = field(default=DbscanParams(), compare=False)

    def __post_init__(self):
        if len(self.coefficients) != self.degree + 1:
            raise ValueError("coefficient count must equal degree + 1")
        if self.r_squared > 1.0:
            raise ValueError("r_squared cannot exceed 1")


def _normalize(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (X - mu) / sd


def dbscan(points, params: DbscanParams = DbscanParams(), scaling: str = "zscore"):
    """Density-based clustering over the (t, value) plane.

    Returns one integer label per point: a cluster id (0, 1, ...) or NOISE.
    A point is core iff it has >= min_pts neighbors within eps, inclusive
    and counting itself. Deterministic: clusters are seeded from the lowest
    unlabeled core index and expanded in index order, so a border point in
    reach of two clusters joins the earlier-seeded one.
    """
    if len(points) == 0:
        raise ValueError("dbscan requires a non-empty point list")
    if scaling not in ("zscore", "none"):
        raise ValueError(f"unknown scaling {scaling!r}")
    X = np.array([[p.t, p.value] for p in points], dtype=np.float64)
    if scaling == "zscore":
        X = _normalize(X)

    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    within = d2 <= params.eps**2
    neighbor_lists = [np.nonzero(row)[0] for row in within]
    core = np.array([len(nb) >= params.min_pts for nb in neighbor_lists])

    n = len(points)
    labels = np.full(n, _UNSEEN, dtype=int)
    cluster = 0
    for i in range(n):
        if labels[i] != _UNSEEN:
            continue
        if not core[i]:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = list(neighbor_lists[i])
        k = 0
        while k < len(queue):
            j = queue[k]
            k += 1
            if labels[j] == NOISE:
                labels[j] = cluster  # border point reclaimed
            if labels[j] != _UNSEEN:
                continue
            labels[j] = cluster
            if core[j]:
                queue.extend(neighbor_lists[j])
        cluster += 1
    return labels


def polyfit(points, degree: int):
    """Least-squares polynomial coefficients, ascending powers of raw t.

    Solved on a rescaled domain for conditioning, then mapped back.
    Raises on fewer distinct t values than degree + 1.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    t = np.array([p.t for p in points], dtype=np.float64)
    v = np.array([p.value for p in points], dtype=np.float64)
    if len(np.unique(t)) < degree + 1:
        raise ValueError(
            f"underdetermined fit: {len(np.unique(t))} distinct t values for degree {degree}"
        )
    fitted = Polynomial.fit(t, v, degree)
    coef = fitted.convert().coef
    if len(coef) < degree + 1:
        coef = np.pad(coef, (0, degree + 1 - len(coef)))
    return coef


def polyval(coefficients, t):
    """Evaluate an ascending-coefficient polynomial at t (scalar or array)."""
    return np.polynomial.polynomial.polyval(np.asarray(t, dtype=np.float64), np.asarray(coefficients))


def r_squared(points, coefficients) -> float:
    """1 - SS_res / SS_tot against the given polynomial."""
    if len(points) < 2:
        raise ValueError("r_squared requires at least 2 points")
    t = np.array([p.t for p in points])
    v = np.array([p.value for p in points])
    ss_tot = float(((v - v.mean()) ** 2).sum())
    if ss_tot == 0:
        raise ValueError("degenerate R^2: zero value variance")
    ss_res = float(((v - polyval(coefficients, t)) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def fit_trend(points, degree: int, params: DbscanParams = DbscanParams()) -> TrendFit:
    """DBSCAN-denoise, then fit and score a polynomial on the inliers.

    Points are sorted internally, so the result does not depend on input
    order.
    """
    pts = sorted(points, key=lambda p: (p.t, p.value, p.frame_ref))
    labels = dbscan(pts, params)
    inliers = [p for p, lab in zip(pts, labels) if lab != NOISE]
    n_out = len(pts) - len(inliers)
    if not inliers:
        raise ValueError("underdetermined fit: no inliers after denoising")
    coef = polyfit(inliers, degree)
    r2 = r_squared(inliers, coef)
    return TrendFit(
        degree=degree,
        coefficients=tuple(float(c) for c in coef),
        r_squared=r2,
        inlier_count=len(inliers),
        outlier_count=n_out,
        params=params,
    )


def points_from_observations(observations):
    """Build SeriesPoints from (timestamp, value, ref) rows.

    t is fractional days since the earliest timestamp, which also bounds
    the conditioning of the polynomial basis. Returns (points, start).
    """
    obs = sorted(observations, key=lambda o: (o[0], o[2]))
    if not obs:
        return [], None
    start = obs[0][0]
    points = [
        SeriesPoint(t=(ts - start).total_seconds() / 86400.0, value=float(val), frame_ref=ref)
        for ts, val, ref in obs
    ]
    return points, start


def write_series_csv(path, points, start: datetime, camera_id: str, metric: str, inlier_flags=None):
    """Write the ``timestamp,value,camera_id,metric,inlier`` schema."""
    if inlier_flags is None:
        inlier_flags = [True] * len(points)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_CSV_COLUMNS)
        for p, flag in zip(points, inlier_flags):
            ts = start + timedelta(days=p.t)
            writer.writerow([format_utc(ts), repr(float(p.value)), camera_id, metric, int(bool(flag))])


def read_series_csv(path):
    """Read the series schema back; returns list of row dicts with parsed types."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SERIES_CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"series CSV missing columns: {', '.join(missing)}")
        for rec in reader:
            rows.append(
                {
                    "timestamp": parse_utc(rec["timestamp"]),
                    "value": float(rec["value"]),
                    "camera_id": rec["camera_id"],
                    "metric": rec["metric"],
                    "inlier": rec["inlier"] not in ("0", "false", "False", ""),
                }
            )
    return rows
