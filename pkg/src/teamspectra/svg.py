"""Minimal SVG rendering for report figures: grouped bars and violins."""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")


def _num(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.items: list[str] = []

    def rect(self, x, y, w, h, fill):
        self.items.append(f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(w)}" height="{_num(h)}" fill="{fill}"/>')

    def line(self, x1, y1, x2, y2, stroke="#333", width=1.0):
        self.items.append(
            f'<line x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" y2="{_num(y2)}" '
            f'stroke="{stroke}" stroke-width="{_num(width)}"/>'
        )

    def polygon(self, points, fill, opacity=0.7):
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in points)
        self.items.append(f'<polygon points="{pts}" fill="{fill}" fill-opacity="{opacity}" stroke="#333"/>')

    def text(self, x, y, s, size=11, anchor="middle", rotate=None):
        tr = f' transform="rotate({rotate} {_num(x)} {_num(y)})"' if rotate is not None else ""
        self.items.append(
            f'<text x="{_num(x)}" y="{_num(y)}" font-size="{size}" font-family="sans-serif" '
            f'text-anchor="{anchor}"{tr}>{escape(str(s))}</text>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">'
        )
        return (
            "\n".join(
                [head, f'<rect width="{self.width}" height="{self.height}" fill="white"/>', *self.items, "</svg>"]
            )
            + "\n"
        )


def bar_chart(
    groups: Sequence[str],
    series: Mapping[str, Sequence[float]],
    title: str = "",
    y_label: str = "",
    width: int = 720,
    height: int = 360,
) -> str:
    """Grouped vertical bars: one group per entry of ``groups``, one bar per series."""
    names = list(series)
    values = np.array([list(series[s]) for s in names], dtype=float).reshape(len(names), len(groups))
    top = max(float(np.nanmax(values)) if values.size else 0.0, 1e-12)
    c = _Canvas(width, height)
    left, right, upper, lower = 60, 20, 40, 60
    plot_w, plot_h = width - left - right, height - upper - lower
    c.text(width / 2, 20, title, size=14)
    c.line(left, upper, left, upper + plot_h)
    c.line(left, upper + plot_h, left + plot_w, upper + plot_h)
    for frac in (0.0, 0.5, 1.0):
        y = upper + plot_h * (1 - frac)
        c.text(left - 6, y + 4, _num(top * frac), size=10, anchor="end")
    c.text(16, upper + plot_h / 2, y_label, rotate=-90)
    slot = plot_w / max(len(groups), 1)
    bar = slot * 0.8 / max(len(names), 1)
    for g, group in enumerate(groups):
        x0 = left + g * slot + slot * 0.1
        for s in range(len(names)):
            v = values[s, g]
            if not np.isfinite(v):
                continue
            h = plot_h * v / top
            c.rect(x0 + s * bar, upper + plot_h - h, bar * 0.95, h, PALETTE[s % len(PALETTE)])
        c.text(left + (g + 0.5) * slot, upper + plot_h + 16, group, size=10)
    for s, name in enumerate(names):
        x = left + 10 + s * 110
        c.rect(x, height - 22, 10, 10, PALETTE[s % len(PALETTE)])
        c.text(x + 14, height - 13, name, size=10, anchor="start")
    return c.render()


def kde_outline(values: Sequence[float], n_points: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density on a grid spanning the data (Silverman bandwidth)."""
    x = np.asarray(values, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        return np.array([lo]), np.array([1.0])
    sd = x.std(ddof=1) if x.size > 1 else 0.0
    iqr = float(np.subtract(*np.percentile(x, [75, 25])))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    bw = 0.9 * spread * x.size ** (-0.2) if spread > 0 else (hi - lo) / 10
    grid = np.linspace(lo, hi, n_points)
    dens = np.exp(-0.5 * ((grid[:, None] - x[None, :]) / bw) ** 2).sum(axis=1)
    return grid, dens / dens.max()


def violin_plot(
    groups: Mapping[str, Sequence[float]],
    title: str = "",
    y_label: str = "",
    width: int = 720,
    height: int = 360,
) -> str:
    """One kernel-density violin per group with a median tick."""
    names = [g for g in groups if len(groups[g])]
    c = _Canvas(width, height)
    left, right, upper, lower = 60, 20, 40, 40
    plot_w, plot_h = width - left - right, height - upper - lower
    c.text(width / 2, 20, title, size=14)
    c.line(left, upper, left, upper + plot_h)
    c.line(left, upper + plot_h, left + plot_w, upper + plot_h)
    c.text(16, upper + plot_h / 2, y_label, rotate=-90)
    if not names:
        return c.render()
    allv = np.concatenate([np.asarray(groups[g], dtype=float) for g in names])
    lo, hi = float(allv.min()), float(allv.max())
    span = hi - lo if hi > lo else 1.0

    def ypos(v):
        return upper + plot_h * (1 - (v - lo) / span)

    c.text(left - 6, upper + 4, _num(hi), size=10, anchor="end")
    c.text(left - 6, upper + plot_h + 4, _num(lo), size=10, anchor="end")
    slot = plot_w / len(names)
    for i, name in enumerate(names):
        cx = left + (i + 0.5) * slot
        grid, dens = kde_outline(groups[name])
        half = dens * slot * 0.4
        if grid.size == 1:
            c.line(
                cx - slot * 0.4,
                ypos(grid[0]),
                cx + slot * 0.4,
                ypos(grid[0]),
                stroke=PALETTE[i % len(PALETTE)],
                width=2,
            )
        else:
            pts = [(cx + h, ypos(v)) for v, h in zip(grid, half)]
            pts += [(cx - h, ypos(v)) for v, h in zip(grid[::-1], half[::-1])]
            c.polygon(pts, PALETTE[i % len(PALETTE)])
        med = float(np.median(np.asarray(groups[name], dtype=float)))
        c.line(cx - slot * 0.15, ypos(med), cx + slot * 0.15, ypos(med), width=2)
        c.text(cx, upper + plot_h + 16, name, size=10)
    return c.render()
