"""Dependency-free SVG figures: median curves with IQR bands, and heatmaps."""
from __future__ import annotations

import math
from html import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=180, top=40, bottom=70)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi] with roughly ``target`` intervals."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return format(v, ".4g")


class _Axes:
    def __init__(self, xlim, ylim, log_x=False):
        self.log_x = log_x
        self.x0, self.x1 = (math.log10(xlim[0]), math.log10(xlim[1])) if log_x else xlim
        self.y0, self.y1 = ylim
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def x(self, v):
        if self.log_x:
            v = math.log10(v)
        span = (self.x1 - self.x0) or 1.0
        return MARGIN["left"] + (v - self.x0) / span * self.pw

    def y(self, v):
        span = (self.y1 - self.y0) or 1.0
        return MARGIN["top"] + (1 - (v - self.y0) / span) * self.ph


def line_plot(result, title: str = "", xlabel: str = "", ylabel: str = "test accuracy",
              log_x: bool = False, reference_lines: dict | None = None) -> str:
    """Median line and translucent IQR band per variant of a SweepResult."""
    categorical = any(isinstance(g, str) for g in result.grid)
    xs = list(range(len(result.grid))) if categorical else [float(g) for g in result.grid]
    if log_x and not categorical:
        keep = [i for i, v in enumerate(xs) if v > 0]
    else:
        keep = list(range(len(xs)))
        log_x = False
    xv = [xs[i] for i in keep]
    aggs = result.aggregates
    lows = [q.q1 for a in aggs.values() for q in a]
    highs = [q.q3 for a in aggs.values() for q in a]
    ylo, yhi = min(0.4, min(lows)), max(1.0, max(highs))
    ax = _Axes((min(xv), max(xv)), (ylo, yhi), log_x=log_x)
    out = _open(title)
    out += _frame(ax, xv, categorical, result.grid, xlabel, ylabel)

    refs = result.reference_lines if reference_lines is None else reference_lines
    for k, (name, v) in enumerate((refs or {}).items()):
        if v is None or (log_x and v <= 0) or not (min(xv) <= v <= max(xv)):
            continue
        px = ax.x(v)
        out.append(f'<line x1="{px:.2f}" y1="{ax.y(yhi):.2f}" x2="{px:.2f}" y2="{ax.y(ylo):.2f}" '
                   f'stroke="{PALETTE[k % len(PALETTE)]}" stroke-dasharray="2,4" stroke-width="1.5">'
                   f'<title>{escape(name)}</title></line>')

    for k, (variant, summaries) in enumerate(aggs.items()):
        color = PALETTE[k % len(PALETTE)]
        q = [summaries[i] for i in keep]
        upper = " ".join(f"{ax.x(x):.2f},{ax.y(s.q3):.2f}" for x, s in zip(xv, q))
        lower = " ".join(f"{ax.x(x):.2f},{ax.y(s.q1):.2f}" for x, s in reversed(list(zip(xv, q))))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{ax.x(x):.2f},{ax.y(s.median):.2f}" for x, s in zip(xv, q))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = MARGIN["top"] + 20 + 22 * k
        lx = WIDTH - MARGIN["right"] + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="3"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}" font-size="13">{escape(variant)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _open(title: str) -> list[str]:
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16">{escape(title)}</text>')
    return out


def _frame(ax: _Axes, xv, categorical, grid, xlabel, ylabel) -> list[str]:
    left, top = MARGIN["left"], MARGIN["top"]
    right, bottom = left + ax.pw, top + ax.ph
    out = [f'<rect x="{left}" y="{top}" width="{ax.pw}" height="{ax.ph}" fill="none" stroke="black"/>']
    if categorical:
        xticks = [(i, str(g)) for i, g in enumerate(grid)]
    elif ax.log_x:
        xticks = [(10.0 ** e, f"1e{e}") for e in range(math.ceil(ax.x0 - 1e-9), math.floor(ax.x1 + 1e-9) + 1)]
    else:
        xticks = [(t, _fmt(t)) for t in nice_ticks(min(xv), max(xv))]
    for v, label in xticks:
        px = ax.x(v)
        out.append(f'<line x1="{px:.2f}" y1="{bottom}" x2="{px:.2f}" y2="{bottom + 6}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{bottom + 22}" text-anchor="middle" font-size="12">{escape(label)}</text>')
    for t in nice_ticks(ax.y0, ax.y1):
        py = ax.y(t)
        out.append(f'<line x1="{left - 6}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 10}" y="{py + 4:.2f}" text-anchor="end" font-size="12">{_fmt(t)}</text>')
    out.append(f'<text x="{(left + right) / 2}" y="{HEIGHT - 20}" text-anchor="middle" font-size="14">{escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{(top + bottom) / 2}" text-anchor="middle" font-size="14" '
               f'transform="rotate(-90 20 {(top + bottom) / 2})">{escape(ylabel)}</text>')
    return out


def _color(t: float) -> str:
    # White -> dark blue ramp.
    t = min(1.0, max(0.0, t))
    r = int(round(255 - t * (255 - 8)))
    g = int(round(255 - t * (255 - 48)))
    b = int(round(255 - t * (255 - 107)))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(matrix, labels=None, title: str = "", fmt: str = ".2f") -> str:
    """Annotated heatmap; NaN cells (e.g. an unset diagonal) are drawn grey."""
    m = np.asarray(matrix, dtype=np.float64)
    n_rows, n_cols = m.shape
    labels = [str(i) for i in range(n_rows)] if labels is None else [str(s) for s in labels]
    finite = m[np.isfinite(m)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    span = (hi - lo) or 1.0
    size = min((WIDTH - 200) / n_cols, (HEIGHT - 120) / n_rows)
    x0, y0 = 140, 60
    out = _open(title)
    for i in range(n_rows):
        for j in range(n_cols):
            v = m[i, j]
            x, y = x0 + j * size, y0 + i * size
            fill = "#cccccc" if not np.isfinite(v) else _color((v - lo) / span)
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{size:.2f}" height="{size:.2f}" '
                       f'fill="{fill}" stroke="white"/>')
            if np.isfinite(v):
                ink = "white" if (v - lo) / span > 0.6 else "black"
                out.append(f'<text x="{x + size / 2:.2f}" y="{y + size / 2 + 4:.2f}" text-anchor="middle" '
                           f'font-size="11" fill="{ink}">{format(v, fmt)}</text>')
    for k, label in enumerate(labels):
        out.append(f'<text x="{x0 - 8}" y="{y0 + (k + 0.5) * size + 4:.2f}" text-anchor="end" '
                   f'font-size="12">{escape(label)}</text>')
        out.append(f'<text x="{x0 + (k + 0.5) * size:.2f}" y="{y0 + n_rows * size + 18:.2f}" '
                   f'text-anchor="middle" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
