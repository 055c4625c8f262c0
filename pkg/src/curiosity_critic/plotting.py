"""Dependency-free SVG charts for run logs."""

from __future__ import annotations

from html import escape

import numpy as np

PALETTE = {
    "random": "#7f7f7f",
    "v1": "#d62728",
    "v2": "#ff7f0e",
    "visit-count": "#8c564b",
    "rnd-state": "#9467bd",
    "rnd-obs": "#e377c2",
    "cc-tabular": "#17becf",
    "cc-neural": "#1f77b4",
    "cc-oracle": "#2ca02c",
}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class Panel:
    """One set of axes inside a larger SVG document."""

    def __init__(self, x0, y0, width, height, xlim, ylim, title=""):
        self.x0, self.y0, self.w, self.h = x0, y0, width, height
        self.xlim, self.ylim = xlim, ylim
        self.title = title
        self.items: list[str] = []

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo) * self.h

    def band(self, xs, lo, hi, color):
        pts = [f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, hi)]
        pts += [f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs[::-1], lo[::-1])]
        self.items.append(
            f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.2" stroke="none"/>'
        )

    def line(self, xs, ys, color, label=None, cls="series"):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        data = f' data-label="{escape(label)}"' if label else ""
        self.items.append(
            f'<polyline class="{cls}"{data} points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )

    def hline(self, y, cls="reference", color="#000"):
        self.items.append(
            f'<line class="{cls}" data-y="{y:.4f}" x1="{_fmt(self.x0)}" x2="{_fmt(self.x0 + self.w)}" '
            f'y1="{_fmt(self.py(y))}" y2="{_fmt(self.py(y))}" stroke="{color}" stroke-dasharray="6,4"/>'
        )

    def render(self) -> str:
        x0, y0, w, h = self.x0, self.y0, self.w, self.h
        out = [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#333"/>']
        for k in range(5):
            yv = self.ylim[0] + k * (self.ylim[1] - self.ylim[0]) / 4
            out.append(
                f'<text x="{x0 - 6}" y="{_fmt(self.py(yv) + 4)}" font-size="10" text-anchor="end">{yv:.2f}</text>'
            )
            xv = self.xlim[0] + k * (self.xlim[1] - self.xlim[0]) / 4
            out.append(
                f'<text x="{_fmt(self.px(xv))}" y="{y0 + h + 14}" font-size="10" text-anchor="middle">{xv:g}</text>'
            )
        if self.title:
            out.append(
                f'<text x="{x0 + w / 2}" y="{y0 - 8}" font-size="12" text-anchor="middle">{escape(self.title)}</text>'
            )
        return "\n".join(out + self.items)


def document(width, height, body: list[str], legend: dict | None = None) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    parts += body
    if legend:
        for i, (name, color) in enumerate(legend.items()):
            y = 20 + 14 * i
            parts.append(f'<rect x="{width - 120}" y="{y - 8}" width="10" height="10" fill="{color}"/>')
            parts.append(f'<text x="{width - 105}" y="{y + 1}" font-size="10">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def curve_panel(panel: Panel, series: dict, xrange=None) -> None:
    """``series`` maps method -> (steps, mean, std)."""
    for name, (xs, mu, sd) in series.items():
        xs, mu, sd = map(np.asarray, (xs, mu, sd))
        if xrange is not None:
            keep = (xs >= xrange[0]) & (xs <= xrange[1])
            xs, mu, sd = xs[keep], mu[keep], sd[keep]
        if xs.size == 0:
            continue
        color = PALETTE.get(name, "#000")
        panel.band(xs, mu - sd, mu + sd, color)
        panel.line(xs, mu, color, label=name)


def _limits(series, xrange=None, pad=0.05, floor=None, ceil=None):
    lo, hi = np.inf, -np.inf
    for xs, mu, sd in series.values():
        xs, mu, sd = map(np.asarray, (xs, mu, sd))
        keep = np.ones(xs.size, bool) if xrange is None else (xs >= xrange[0]) & (xs <= xrange[1])
        if keep.any():
            lo = min(lo, float((mu - sd)[keep].min()))
            hi = max(hi, float((mu + sd)[keep].max()))
    if not np.isfinite(lo):
        lo, hi = 0.0, 1.0
    if hi - lo < 1e-9:
        hi = lo + 1.0
    span = hi - lo
    lo, hi = lo - pad * span, hi + pad * span
    if floor is not None:
        lo = max(lo, floor)
    if ceil is not None:
        hi = min(hi, ceil)
    return lo, hi


def error_figure(
    series: dict, total_steps: int, zoom=(25_000, 35_000), zoom_exclude=("v1", "visit-count", "rnd-obs")
) -> str:
    left = Panel(60, 40, 420, 300, (0, total_steps), _limits(series), "Mean L2 error on deterministic cells")
    curve_panel(left, series)
    zs = {k: v for k, v in series.items() if k not in zoom_exclude}
    zx = (max(0, min(zoom[0], total_steps)), min(zoom[1], total_steps))
    if zx[1] <= zx[0]:
        zx = (0, total_steps)
    right = Panel(560, 40, 420, 300, zx, _limits(zs, zx), f"Zoom: steps {zx[0]}-{zx[1]}")
    curve_panel(right, zs, zx)
    return document(1120, 380, [left.render(), right.render()], {k: PALETTE.get(k, "#000") for k in series})


def fraction_figure(series: dict, total_steps: int) -> str:
    p = Panel(60, 40, 600, 300, (0, total_steps), (0.0, 1.0), "Fraction of steps in the deterministic region")
    curve_panel(p, series)
    return document(800, 380, [p.render()], {k: PALETTE.get(k, "#000") for k in series})


def critic_figure(det: dict, stoch: dict, total_steps: int, floor: float) -> str:
    title = "Mean critic estimate: deterministic cells"
    left = Panel(60, 40, 420, 300, (0, total_steps), _limits(det, floor=None), title)
    lo, hi = left.ylim
    left.ylim = (min(lo, -0.1), max(hi, 0.5))
    curve_panel(left, det)
    left.hline(0.0, cls="oracle-line")
    right = Panel(560, 40, 420, 300, (0, total_steps), _limits(stoch), "Mean critic estimate: stochastic cells")
    lo, hi = right.ylim
    right.ylim = (min(lo, floor - 0.5), max(hi, floor + 0.5))
    curve_panel(right, stoch)
    right.hline(floor, cls="oracle-line")
    return document(1120, 380, [left.render(), right.render()], {k: PALETTE.get(k, "#000") for k in det})


def heatmap_figure(grids: dict, title: str, boundary_col: int = 15) -> str:
    """One 30x30 panel per method; brightness is count / max count in that panel."""
    cell = 8
    size = 30 * cell
    gap = 40
    body = []
    for i, (name, counts) in enumerate(grids.items()):
        counts = np.asarray(counts, dtype=np.float64)
        peak = counts.max()
        bright = counts / peak if peak > 0 else counts
        x0 = 20 + i * (size + gap)
        y0 = 50
        body.append(f'<g class="panel" data-method="{escape(name)}" data-max="{bright.max():.6f}">')
        body.append(f'<text x="{x0 + size / 2}" y="{y0 - 8}" font-size="12" text-anchor="middle">{escape(name)}</text>')
        for r in range(counts.shape[0]):
            for c in range(counts.shape[1]):
                v = int(round(255 * bright[r, c]))
                body.append(
                    f'<rect x="{x0 + c * cell}" y="{y0 + r * cell}" width="{cell}" height="{cell}" '
                    f'fill="rgb({v},{v},{v})" data-b="{bright[r, c]:.6f}"/>'
                )
        bx = x0 + boundary_col * cell
        body.append(
            f'<line class="boundary" x1="{bx}" x2="{bx}" y1="{y0}" y2="{y0 + size}" '
            f'stroke="cyan" stroke-width="2" stroke-dasharray="5,3"/>'
        )
        body.append("</g>")
    width = 40 + len(grids) * (size + gap)
    body.insert(0, f'<text x="20" y="20" font-size="14">{escape(title)}</text>')
    return document(width, size + 80, body)
