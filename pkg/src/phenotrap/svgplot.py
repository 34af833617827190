"""Static SVG figures for series, fitted trends, and daily visit counts.

Hand-rolled on purpose: output must be byte-identical across runs on the
same inputs, so no plotting library with embedded ids, dates, or version
strings. Geometry is emitted with fixed precision.
"""

from __future__ import annotations

import math

from .series import polyval

__all__ = ["Canvas", "render_series", "render_daily_counts", "TREND_SAMPLES"]

TREND_SAMPLES = 200

WIDTH, HEIGHT = 800, 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 24, 40, 56

PALETTE = ["#2a6f4e", "#b5432c", "#3b5b92", "#8a6d1a", "#6d3b92", "#247272"]


class Canvas:
    """Maps a data window onto the fixed plot area."""

    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x: float) -> float:
        frac = (x - self.x0) / (self.x1 - self.x0)
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        frac = (y - self.y0) / (self.y1 - self.y0)
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _axes(canvas: Canvas, title: str, x_label: str, y_label: str):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{_esc(title)}</text>',
    ]
    ax_y = HEIGHT - MARGIN_B
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{ax_y}" x2="{WIDTH - MARGIN_R}" y2="{ax_y}" stroke="#222222"/>'
    )
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{ax_y}" stroke="#222222"/>'
    )
    for t in _ticks(canvas.x0, canvas.x1):
        x = canvas.px(t)
        parts.append(f'<line x1="{_fmt(x)}" y1="{ax_y}" x2="{_fmt(x)}" y2="{ax_y + 5}" stroke="#222222"/>')
        parts.append(
            f'<text x="{_fmt(x)}" y="{ax_y + 20}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{t:g}</text>'
        )
    for t in _ticks(canvas.y0, canvas.y1):
        y = canvas.py(t)
        parts.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(y)}" x2="{MARGIN_L}" y2="{_fmt(y)}" stroke="#222222"/>')
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{_fmt(y + 4)}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{t:g}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{_esc(x_label)}</text>'
    )
    parts.append(
        f'<text x="18" y="{(MARGIN_T + ax_y) / 2:.0f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="13" transform="rotate(-90 18 {(MARGIN_T + ax_y) / 2:.0f})">{_esc(y_label)}</text>'
    )
    return parts


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_series(points, trend_coefficients=None, inlier_flags=None, title="", x_label="days", y_label="value") -> str:
    """Series figure: observation markers, a polyline through them, and an
    optional fitted curve sampled at TREND_SAMPLES points.

    An empty series still renders a complete (blank) set of axes.
    """
    xs = [p.t for p in points]
    ys = [p.value for p in points]
    if xs:
        x_range = (min(xs), max(xs))
        y_lo, y_hi = min(ys), max(ys)
        pad = (y_hi - y_lo) * 0.05 or 0.5
        y_range = (y_lo - pad, y_hi + pad)
    else:
        x_range, y_range = (0.0, 1.0), (0.0, 1.0)
    canvas = Canvas(x_range, y_range)
    parts = _axes(canvas, title, x_label, y_label)

    if inlier_flags is None:
        inlier_flags = [True] * len(points)

    if points:
        coords = " ".join(f"{_fmt(canvas.px(p.t))},{_fmt(canvas.py(p.value))}" for p in points)
        parts.append(
            f'<polyline class="series-line" points="{coords}" fill="none" '
            f'stroke="{PALETTE[0]}" stroke-width="1" opacity="0.5"/>'
        )
    for p, ok in zip(points, inlier_flags):
        cls = "inlier" if ok else "outlier"
        fill = PALETTE[0] if ok else PALETTE[1]
        parts.append(
            f'<circle class="{cls}" cx="{_fmt(canvas.px(p.t))}" cy="{_fmt(canvas.py(p.value))}" '
            f'r="3" fill="{fill}"/>'
        )

    if trend_coefficients is not None and xs:
        t0, t1 = min(xs), max(xs)
        samples = [t0 + (t1 - t0) * i / (TREND_SAMPLES - 1) for i in range(TREND_SAMPLES)]
        coords = " ".join(
            f"{_fmt(canvas.px(t))},{_fmt(canvas.py(float(polyval(trend_coefficients, t))))}" for t in samples
        )
        parts.append(
            f'<polyline class="trend-line" points="{coords}" fill="none" '
            f'stroke="{PALETTE[2]}" stroke-width="2"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_daily_counts(counts, title="", x_label="date", y_label="visits") -> str:
    """Daily visit counts as stems, one color per species."""
    dates = sorted({c.date for c in counts})
    species = sorted({c.species for c in counts})
    date_x = {d: i for i, d in enumerate(dates)}
    max_v = max((c.visits for c in counts), default=1)
    canvas = Canvas((-0.5, max(len(dates) - 0.5, 0.5)), (0.0, max_v * 1.1))
    parts = _axes(canvas, title, x_label, y_label)

    # stems offset slightly per species so overlapping days stay readable
    n_sp = max(len(species), 1)
    for c in sorted(counts, key=lambda c: (c.date, c.species, c.camera_id)):
        si = species.index(c.species)
        x = date_x[c.date] + (si - (n_sp - 1) / 2) * 0.12
        color = PALETTE[si % len(PALETTE)]
        parts.append(
            f'<line class="stem" x1="{_fmt(canvas.px(x))}" y1="{_fmt(canvas.py(0))}" '
            f'x2="{_fmt(canvas.px(x))}" y2="{_fmt(canvas.py(c.visits))}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<circle class="count" cx="{_fmt(canvas.px(x))}" cy="{_fmt(canvas.py(c.visits))}" '
            f'r="3" fill="{color}"/>'
        )
    for d, i in date_x.items():
        parts.append(
            f'<text x="{_fmt(canvas.px(i))}" y="{HEIGHT - MARGIN_B + 34}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="9">{_esc(d)}</text>'
        )
    for si, sp in enumerate(species):
        color = PALETTE[si % len(PALETTE)]
        y = MARGIN_T + 14 * si
        parts.append(f'<rect x="{WIDTH - 170}" y="{y - 8}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{WIDTH - 155}" y="{y}" font-family="sans-serif" font-size="11">{_esc(sp)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
