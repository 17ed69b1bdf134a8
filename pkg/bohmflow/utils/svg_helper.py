"""
SVG Helper - minimal vector previews (polylines and markers only)
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

PALETTE = ("#1f4e9c", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50")


@dataclass
class SvgPlot:
    """
    Accumulates polylines and markers in data coordinates and renders them
    into a fixed-size SVG with a shared linear scale.
    """

    title: str
    width: int = 640
    height: int = 480
    margin: int = 40
    log_x: bool = False
    log_y: bool = False
    _lines: List[Tuple[np.ndarray, np.ndarray, str]] = field(default_factory=list)
    _markers: List[Tuple[float, float, str]] = field(default_factory=list)

    def _transform(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.log_x:
                x = np.log10(x)
            if self.log_y:
                y = np.log10(y)
        return x, y

    def line(self, x: Sequence[float], y: Sequence[float], color: Optional[str] = None) -> "SvgPlot":
        x, y = self._transform(x, y)
        keep = np.isfinite(x) & np.isfinite(y)
        color = color or PALETTE[len(self._lines) % len(PALETTE)]
        self._lines.append((x[keep], y[keep], color))
        return self

    def marker(self, x: float, y: float, color: str = "#000000") -> "SvgPlot":
        tx, ty = self._transform([x], [y])
        if np.isfinite(tx[0]) and np.isfinite(ty[0]):
            self._markers.append((float(tx[0]), float(ty[0]), color))
        return self

    def _bounds(self):
        xs = [x for x, _, _ in self._lines] + [np.array([m[0] for m in self._markers])]
        ys = [y for _, y, _ in self._lines] + [np.array([m[1] for m in self._markers])]
        xs = np.concatenate([x for x in xs if x.size]) if any(x.size for x in xs) else np.zeros(1)
        ys = np.concatenate([y for y in ys if y.size]) if any(y.size for y in ys) else np.zeros(1)
        x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1
        return x0, x1, y0, y1

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        w, h, m = self.width, self.height, self.margin

        def sx(x):
            return m + (x - x0) / (x1 - x0) * (w - 2 * m)

        def sy(y):
            return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
            f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>',
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#999999"/>',
            f'<text x="{m}" y="{m - 12}" font-family="sans-serif" font-size="14">{self.title}</text>',
            f'<text x="{m}" y="{h - 12}" font-family="sans-serif" font-size="10">'
            f'x: [{x0:.4g}, {x1:.4g}]  y: [{y0:.4g}, {y1:.4g}]</text>',
        ]
        for x, y, color in self._lines:
            if x.size < 2:
                continue
            points = " ".join(f"{px:.2f},{py:.2f}" for px, py in zip(sx(x), sy(y)))
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{points}"/>')
        for x, y, color in self._markers:
            parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def decimate(n: int, limit: int = 4000) -> np.ndarray:
    """Evenly spaced indices keeping at most `limit` of n points (always the last)."""
    if n <= limit:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, limit).round().astype(int))
