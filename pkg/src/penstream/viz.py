"""Deterministic SVG rendering: character traces, per-stroke panels, heatmaps.

All output is plain SVG text with a fixed two-decimal coordinate format
and no timestamps or generated ids, so identical inputs give
byte-identical documents and goldens can be diffed.  The tablet's y
axis grows downward; rendering flips it so characters appear upright.
One scale factor serves both axes, preserving aspect ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .metrics import (
    EmptyTree,
    TrialMetrics,
    format_length,
    format_pressure,
    format_time,
)
from .model import SegmentTree, TrialRecord
from .segmentation import effective_onset_index

PLOTS_CHAR_DIR = "plots/char"
PLOTS_BY_STROKE_DIR = "plots/by-stroke"


class NonSquare(ValueError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    width: int = 360
    height: int = 360
    margin: int = 24
    panel_width: int = 230
    panel_height: int = 250
    stroke_color: str = "#6a3d9a"
    faded_color: str = "#c9c9c9"
    air_color: str = "#9a9a9a"
    onset_color: str = "#6a3d9a"
    jump_color: str = "#2e8b57"
    font_px: int = 10

    def __post_init__(self) -> None:
        for name in ("width", "height", "margin", "panel_width", "panel_height", "font_px"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def character_plot_name(trial: TrialRecord) -> str:
    """Subject, then item number, then the written character."""
    return f"{trial.subject_id}_{trial.row_index}_{trial.target}"


def _fmt(value: float) -> str:
    return f"{value:.2f}"


class _Mapper:
    """Device coordinates -> canvas box, y flipped, aspect preserved."""

    def __init__(self, xs, ys, x0: float, y0: float, w: float, h: float):
        self.min_x, self.max_x = min(xs), max(xs)
        self.min_y, self.max_y = min(ys), max(ys)
        span_x = max(self.max_x - self.min_x, 1.0)
        span_y = max(self.max_y - self.min_y, 1.0)
        self.scale = min(w / span_x, h / span_y)
        self.ox = x0 + (w - (self.max_x - self.min_x) * self.scale) / 2.0
        self.oy = y0 + (h - (self.max_y - self.min_y) * self.scale) / 2.0

    def map(self, x: float, y: float) -> tuple[float, float]:
        return (
            self.ox + (x - self.min_x) * self.scale,
            self.oy + (self.max_y - y) * self.scale,
        )


def _stroke_polyline(
    trial: TrialRecord, tree: SegmentTree, i: int, mapper: _Mapper, color: str, width: float
) -> str:
    span = tree.strokes[i]
    first = effective_onset_index(span)
    points = " ".join(
        "{},{}".format(*map(_fmt, mapper.map(s.x, s.y)))
        for s in trial.samples[first : span.last_index + 1]
    )
    return (
        f'<polyline points="{points}" fill="none" stroke="{color}" '
        f'stroke-width="{_fmt(width)}" stroke-linecap="round" stroke-linejoin="round"/>'
    )


def _pressed_bounds(trial: TrialRecord, tree: SegmentTree):
    xs, ys = [], []
    for span in tree.strokes:
        for s in trial.samples[effective_onset_index(span) : span.last_index + 1]:
            xs.append(s.x)
            ys.append(s.y)
    return xs, ys


def render_character(
    trial: TrialRecord, tree: SegmentTree, plot: PlotSpec | None = None
) -> str:
    """The written character as one polyline per stroke, onsets dotted."""
    if not tree.strokes:
        raise EmptyTree()
    plot = plot or PlotSpec()
    xs, ys = _pressed_bounds(trial, tree)
    inner = plot.width - 2 * plot.margin, plot.height - 2 * plot.margin
    mapper = _Mapper(xs, ys, plot.margin, plot.margin, *inner)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{plot.width}" '
        f'height="{plot.height}" viewBox="0 0 {plot.width} {plot.height}">',
        f'<rect width="{plot.width}" height="{plot.height}" fill="#ffffff"/>',
    ]
    for i in range(len(tree.strokes)):
        parts.append(_stroke_polyline(trial, tree, i, mapper, plot.stroke_color, 1.8))
    for span in tree.strokes:
        s = trial.samples[span.first_index]
        cx, cy = map(_fmt, mapper.map(s.x, s.y))
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="2.20" fill="{plot.onset_color}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_stroke_panels(
    trial: TrialRecord,
    tree: SegmentTree,
    metrics: TrialMetrics,
    plot: PlotSpec | None = None,
) -> str:
    """One panel per stroke in production order.

    Earlier strokes are faded, the current stroke is highlighted, the
    approach movement shows as air dots, and the jump from the previous
    stroke's end to the current onset is drawn in its own color.  The
    annotation block repeats the stroke's metric values exactly as they
    appear in the exported rows.
    """
    if not tree.strokes:
        raise EmptyTree()
    plot = plot or PlotSpec()
    n = len(tree.strokes)
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    width, height = cols * plot.panel_width, rows * plot.panel_height
    anno_h = 6 * (plot.font_px + 3) + 6
    pad = 10

    xs, ys = _pressed_bounds(trial, tree)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    samples = trial.samples
    for i in range(n):
        px = (i % cols) * plot.panel_width
        py = (i // cols) * plot.panel_height
        draw_w = plot.panel_width - 2 * pad
        draw_h = plot.panel_height - 2 * pad - anno_h
        mapper = _Mapper(xs, ys, px + pad, py + pad, draw_w, draw_h)
        parts.append(
            f'<rect x="{px}" y="{py}" width="{plot.panel_width}" '
            f'height="{plot.panel_height}" fill="none" stroke="#dddddd"/>'
        )
        for j in range(i):
            parts.append(_stroke_polyline(trial, tree, j, mapper, plot.faded_color, 1.2))

        span = tree.strokes[i]
        onset_idx = effective_onset_index(span)
        onset_t = samples[onset_idx].t
        if i > 0:
            prev_last = tree.strokes[i - 1].last_index
            window = (samples[prev_last].t, onset_t)
            for s in samples:
                if s.pressure == 0 and window[0] < s.t < window[1]:
                    cx, cy = map(_fmt, mapper.map(s.x, s.y))
                    parts.append(
                        f'<circle cx="{cx}" cy="{cy}" r="1.30" fill="{plot.air_color}"/>'
                    )
            x1, y1 = map(_fmt, mapper.map(samples[prev_last].x, samples[prev_last].y))
            x2, y2 = map(_fmt, mapper.map(samples[onset_idx].x, samples[onset_idx].y))
            parts.append(
                f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
                f'stroke="{plot.jump_color}" stroke-width="1.20"/>'
            )
        parts.append(_stroke_polyline(trial, tree, i, mapper, plot.stroke_color, 1.8))
        ox, oy = map(_fmt, mapper.map(samples[onset_idx].x, samples[onset_idx].y))
        parts.append(f'<circle cx="{ox}" cy="{oy}" r="2.20" fill="{plot.onset_color}"/>')

        sm = metrics.strokes[i]
        offset_t = samples[span.last_index].t
        labels = (
            f"Abs RT: {format_time(sm.abs_rt)}",
            f"Avg Pressure: {format_pressure(sm.stroke_press_avg)}",
            f"S length: {format_length(sm.stroke_len)}",
            f"Prev Dist: {format_length(sm.stroke_dist)}",
            f"Start, RT: {format_time(onset_t)}, {format_time(sm.stroke_rt_rel)}",
            f"End, Dur: {format_time(offset_t)}, {format_time(sm.stroke_dur)}",
        )
        ty = py + plot.panel_height - anno_h + plot.font_px
        for line in labels:
            parts.append(
                f'<text x="{px + pad}" y="{ty}" font-family="sans-serif" '
                f'font-size="{plot.font_px}" fill="#222222">{line}</text>'
            )
            ty += plot.font_px + 3
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _heat_color(r: float) -> str:
    """Blue for negative, white at zero, red for positive."""
    r = max(-1.0, min(1.0, r))
    if r >= 0:
        g = b = round(255 * (1 - r))
        return f"#ff{g:02x}{b:02x}"
    rg = round(255 * (1 + r))
    return f"#{rg:02x}{rg:02x}ff"


def render_correlation_heatmap(matrix, plot: PlotSpec | None = None) -> str:
    """r values as a colored grid, each cell labeled r to 2 decimals plus stars."""
    plot = plot or PlotSpec()
    names = tuple(matrix.names)
    k = len(names)
    r = matrix.r
    if getattr(r, "shape", None) != (k, k):
        raise NonSquare(f"expected a {k}x{k} matrix")
    cell = 46
    gutter = 110
    width = gutter + k * cell + 10
    height = gutter + k * cell + 10

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for j, name in enumerate(names):
        x = gutter + j * cell + cell / 2
        parts.append(
            f'<text x="{_fmt(x)}" y="{gutter - 6}" font-family="sans-serif" '
            f'font-size="{plot.font_px}" fill="#222222" text-anchor="start" '
            f'transform="rotate(-60 {_fmt(x)} {gutter - 6})">{name}</text>'
        )
    for i, name in enumerate(names):
        y = gutter + i * cell + cell / 2 + plot.font_px / 2
        parts.append(
            f'<text x="{gutter - 6}" y="{_fmt(y)}" font-family="sans-serif" '
            f'font-size="{plot.font_px}" fill="#222222" text-anchor="end">{name}</text>'
        )
        for j in range(k):
            value = float(r[i, j])
            x = gutter + j * cell
            yc = gutter + i * cell
            parts.append(
                f'<rect x="{x}" y="{yc}" width="{cell}" height="{cell}" '
                f'fill="{_heat_color(value)}" stroke="#ffffff"/>'
            )
            label = f"{value:.2f}" + (matrix.star(i, j) if i != j else "")
            parts.append(
                f'<text x="{_fmt(x + cell / 2)}" y="{_fmt(yc + cell / 2 + plot.font_px / 2)}" '
                f'font-family="sans-serif" font-size="{plot.font_px}" fill="#111111" '
                f'text-anchor="middle">{label}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
