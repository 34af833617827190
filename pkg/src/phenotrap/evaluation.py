"""Detection-quality scoring against ground truth, plus the chi-square
composition test used to compare detected and missed visits.

Matching follows the standard benchmark convention: per image, greedily by
descending prediction confidence, each prediction claiming the unmatched
ground-truth box of highest IoU when that IoU clears the floor. Boxes are
loose in this dataset, so the floor is low (0.1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .imgproc import iou

__all__ = [
    "MatchResult",
    "PrfScores",
    "ContingencyTable",
    "match_detections",
    "prf",
    "prf_from_counts",
    "chi_square",
    "regularized_gamma_q",
    "write_eval_csv",
]

EVAL_CSV_COLUMNS = ["method", "precision", "recall", "f1", "tp", "fp", "fn"]


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    matched_pairs: tuple  # ((image, pred_idx), (image, gt_idx), iou)

    def __post_init__(self):
        if self.tp != len(self.matched_pairs):
            raise ValueError("tp disagrees with matched_pairs")


@dataclass(frozen=True)
class PrfScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ContingencyTable:
    """Counts over (category row) x (outcome column), e.g. species x
    detected/missed."""

    rows: tuple
    columns: tuple
    counts: tuple  # row-major tuple of tuples

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError("contingency table must be at least 2x2")
        if arr.shape != (len(self.rows), len(self.columns)):
            raise ValueError("label lengths disagree with counts shape")
        if (arr < 0).any():
            raise ValueError("counts must be non-negative")


def match_detections(pred, gt, iou_min: float = 0.1) -> MatchResult:
    """Match predictions to ground truth per image; count tp / fp / fn.

    ``pred`` and ``gt`` map image path -> list of entries (anything with
    ``bbox`` and, for predictions, ``confidence``). The two must cover the
    same images: adapters emit a record per image even when empty.
    Deterministic: confidence ties break by input order, IoU ties by
    ground-truth index.
    """
    pred_missing = sorted(set(gt) - set(pred))
    gt_missing = sorted(set(pred) - set(gt))
    if pred_missing or gt_missing:
        raise ValueError(
            "prediction and ground-truth image sets differ; "
            f"missing from pred: {pred_missing[:5]}, missing from gt: {gt_missing[:5]}"
        )

    tp = fp = fn = 0
    pairs = []
    for image in sorted(pred):
        p_entries = list(pred[image])
        g_entries = list(gt[image])
        order = sorted(range(len(p_entries)), key=lambda i: (-p_entries[i].confidence, i))
        unmatched_gt = set(range(len(g_entries)))
        for pi in order:
            best_gi, best_iou = None, 0.0
            for gi in sorted(unmatched_gt):
                v = iou(p_entries[pi].bbox, g_entries[gi].bbox)
                if v > best_iou:
                    best_gi, best_iou = gi, v
            if best_gi is not None and best_iou > iou_min:
                unmatched_gt.discard(best_gi)
                tp += 1
                pairs.append(((image, pi), (image, best_gi), best_iou))
            else:
                fp += 1
        fn += len(unmatched_gt)
    return MatchResult(tp=tp, fp=fp, fn=fn, matched_pairs=tuple(pairs))


def prf_from_counts(tp: int, fp: int, fn: int) -> PrfScores:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PrfScores(precision=precision, recall=recall, f1=f1)


def prf(m: MatchResult) -> PrfScores:
    return prf_from_counts(m.tp, m.fp, m.fn)


def chi_square(table: ContingencyTable):
    """Pearson chi-square test of independence.

    Expected counts come from the row/column marginals; the p-value is the
    chi-square survival function, evaluated in-repo via the regularized
    incomplete gamma (accurate to ~1e-10 for the small dfs seen here).
    Returns (statistic, degrees_of_freedom, p_value).
    """
    obs = np.asarray(table.counts, dtype=np.float64)
    row = obs.sum(axis=1)
    col = obs.sum(axis=0)
    if (row == 0).any() or (col == 0).any():
        raise ValueError("degenerate table: zero row or column marginal")
    expected = np.outer(row, col) / obs.sum()
    statistic = float(((obs - expected) ** 2 / expected).sum())
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return statistic, df, regularized_gamma_q(df / 2.0, statistic / 2.0)


def regularized_gamma_q(a: float, x: float, eps: float = 1e-14, max_iter: int = 500) -> float:
    """Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).

    Series expansion of P for x < a + 1, Lentz continued fraction for Q
    otherwise (the numerically stable split).
    """
    if a <= 0:
        raise ValueError("a must be > 0")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 1.0
    lg = math.lgamma(a)
    if x < a + 1.0:
        # P(a, x) by series: x^a e^-x / Gamma(a) * sum x^n / (a)_{n+1}
        term = 1.0 / a
        total = term
        n = a
        for _ in range(max_iter):
            n += 1.0
            term *= x / n
            total += term
            if abs(term) < abs(total) * eps:
                break
        p = total * math.exp(-x + a * math.log(x) - lg)
        return 1.0 - p
    # Q(a, x) by continued fraction (modified Lentz)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h * math.exp(-x + a * math.log(x) - lg)


def write_eval_csv(path, rows):
    """Write scorecard rows: (method, PrfScores, MatchResult or counts)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVAL_CSV_COLUMNS)
        for method, scores, counts in rows:
            writer.writerow(
                [
                    method,
                    f"{scores.precision:.6f}",
                    f"{scores.recall:.6f}",
                    f"{scores.f1:.6f}",
                    counts[0],
                    counts[1],
                    counts[2],
                ]
            )
