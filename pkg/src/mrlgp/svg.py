"""Tiny SVG line-plot writer: polylines for series, polygons for bands."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555")


@dataclass
class Plot:
    width: int = 800
    height: int = 400
    margin: int = 50
    title: str = ""
    _items: list = field(default_factory=list)

    def line(self, x, y, color=None, label=None, width=1.5, dashed=False):
        self._items.append(("line", np.asarray(x, float), np.asarray(y, float),
                            color, label, width, dashed))
        return self

    def points(self, x, y, color=None, label=None, radius=1.5):
        self._items.append(("points", np.asarray(x, float), np.asarray(y, float),
                            color, label, radius, False))
        return self

    def band(self, x, lo, hi, color=None, label=None, opacity=0.25):
        x = np.asarray(x, float)
        xs = np.concatenate([x, x[::-1]])
        ys = np.concatenate([np.asarray(lo, float), np.asarray(hi, float)[::-1]])
        self._items.append(("band", xs, ys, color, label, opacity, False))
        return self

    def _bounds(self):
        xs = np.concatenate([it[1] for it in self._items]) if self._items else np.zeros(1)
        ys = np.concatenate([it[2] for it in self._items]) if self._items else np.zeros(1)
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if x1 == x0:
            x1 = x0 + 1.0
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        m, W, H = self.margin, self.width, self.height
        sx = lambda v: m + (v - x0) / (x1 - x0) * (W - 2 * m)
        sy = lambda v: H - m - (v - y0) / (y1 - y0) * (H - 2 * m)

        def pts(xv, yv):
            return " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(xv, yv))

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
               f'viewBox="0 0 {W} {H}">',
               f'<rect width="{W}" height="{H}" fill="white"/>',
               f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" '
               'fill="none" stroke="#999"/>']
        for v, anchor in ((x0, "start"), (x1, "end")):
            out.append(f'<text x="{sx(v):.2f}" y="{H - m + 16}" font-size="11" '
                       f'text-anchor="{anchor}">{v:.4g}</text>')
        for v in (y0, y1):
            out.append(f'<text x="{m - 4}" y="{sy(v):.2f}" font-size="11" '
                       f'text-anchor="end">{v:.4g}</text>')
        if self.title:
            out.append(f'<text x="{W / 2:.1f}" y="{m / 2:.1f}" font-size="14" '
                       f'text-anchor="middle">{escape(self.title)}</text>')
        legend = []
        for i, (kind, xv, yv, color, label, size, dashed) in enumerate(self._items):
            color = color or PALETTE[i % len(PALETTE)]
            if kind == "band":
                out.append(f'<polygon points="{pts(xv, yv)}" fill="{color}" '
                           f'fill-opacity="{size}" stroke="none"/>')
            elif kind == "line":
                dash = ' stroke-dasharray="5,3"' if dashed else ""
                out.append(f'<polyline points="{pts(xv, yv)}" fill="none" stroke="{color}" '
                           f'stroke-width="{size}"{dash}/>')
            else:
                out.extend(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="{size}" fill="{color}"/>'
                           for a, b in zip(xv, yv))
            if label:
                legend.append((label, color))
        for j, (label, color) in enumerate(legend):
            y = m + 14 + 16 * j
            out.append(f'<rect x="{W - m - 120}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{W - m - 105}" y="{y}" font-size="11">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
