"""
Trace comparison tables and a small dependency-free SVG line chart with a log y-axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from html import escape
from pathlib import Path

import numpy as np

from .engine import ExperimentTrace

__all__ = ["log_slope", "moving_average", "CompareRow", "compare_report", "svg_chart", "format_table"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def log_slope(k, gap) -> float:
    """Least-squares slope of ``log10(gap)`` against ``k`` over the positive gaps (nan if < 2 points)."""
    k, gap = np.asarray(k, dtype=float), np.asarray(gap, dtype=float)
    keep = gap > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(k[keep], np.log10(gap[keep]), 1)[0])


def moving_average(values, window: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if window < 1 or window > len(values):
        return np.array([])
    c = np.cumsum(np.insert(values, 0, 0.0))
    return (c[window:] - c[:-window]) / window


@dataclass(frozen=True)
class CompareRow:
    label: str
    final_gap: float
    slope: float
    iterations: int


def compare_report(paths, out_svg=None, labels=None, title="optimality gap"):
    """Align two or more CSV traces on their shared k-grid; return table rows and optionally an SVG."""
    paths = [Path(p) for p in paths]
    if len(paths) < 2:
        raise ValueError(f"compare needs at least two traces, got {len(paths)}")
    traces = [ExperimentTrace.from_csv(p) for p in paths]
    grid = traces[0].k
    for p, t in zip(paths[1:], traces[1:]):
        if len(t.k) != len(grid) or np.any(t.k != grid):
            raise ValueError(f"{p} is recorded on a different k-grid than {paths[0]}")
    labels = labels or [p.stem for p in paths]
    rows = [CompareRow(lab, t.final_gap, log_slope(t.k, t.gap), int(t.k[-1])) for lab, t in zip(labels, traces)]
    if out_svg is not None:
        Path(out_svg).write_text(svg_chart([(lab, t.k, t.gap) for lab, t in zip(labels, traces)], title=title))
    return rows


def format_table(rows) -> str:
    width = max(12, *(len(r.label) for r in rows))
    lines = [f"{'trace':<{width}}  {'final_gap':>12}  {'log10_slope':>12}  {'k':>7}"]
    for r in rows:
        lines.append(f"{r.label:<{width}}  {r.final_gap:>12.4e}  {r.slope:>12.4e}  {r.iterations:>7d}")
    return "\n".join(lines)


def _nice_decades(lo, hi):
    lo_d, hi_d = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if hi_d == lo_d:
        hi_d += 1
    step = max(1, math.ceil((hi_d - lo_d) / 8))
    return lo_d, hi_d, step


def svg_chart(series, title="optimality gap", xlabel="iteration k", ylabel="gap",
              width=640, height=400) -> str:
    """Render ``[(label, x, y), ...]`` as polylines on a log10 y-axis.

    Non-positive y values are dropped (they cannot be drawn on a log axis).
    """
    left, right, top, bottom = 70, 150, 30, 50
    pw, ph = width - left - right, height - top - bottom
    xs = [np.asarray(x, dtype=float) for _, x, _ in series]
    ys = [np.asarray(y, dtype=float) for _, _, y in series]
    pos = np.concatenate([y[y > 0] for y in ys]) if ys else np.array([])
    if pos.size == 0:
        pos = np.array([1e-16, 1.0])
    lo_d, hi_d, step = _nice_decades(pos.min(), pos.max())
    xmin = min(x.min() for x in xs) if xs else 0.0
    xmax = max(x.max() for x in xs) if xs else 1.0
    if xmax == xmin:
        xmax = xmin + 1

    def px(x):
        return left + (x - xmin) / (xmax - xmin) * pw

    def py(y):
        return top + (hi_d - math.log10(y)) / (hi_d - lo_d) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for d in range(lo_d, hi_d + 1, step):
        y = py(10.0**d)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">1e{d}</text>')
    for t in np.linspace(xmin, xmax, 6):
        x = px(t)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>'
    )
    for idx, ((label, _, _), x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[idx % len(PALETTE)]
        keep = y > 0
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 14 + 16 * idx
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
