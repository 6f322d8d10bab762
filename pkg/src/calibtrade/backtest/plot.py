"""Minimal static SVG line chart, enough for equity curves."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np


def svg_line_chart(values, title: str = "", width: int = 640, height: int = 320, pad: int = 40) -> str:
    y = np.asarray(values, dtype=float)
    if len(y) == 0:
        raise ValueError("nothing to plot")
    lo, hi = float(y.min()), float(y.max())
    span = hi - lo or 1.0
    xs = pad + (width - 2 * pad) * np.arange(len(y)) / max(len(y) - 1, 1)
    ys = height - pad - (height - 2 * pad) * (y - lo) / span
    # a few thousand vertices are plenty for a static figure
    step = max(1, len(y) // 4000)
    pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(xs[::step], ys[::step]))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<text x="{pad}" y="{pad - 15}" font-size="14">{escape(title)}</text>\n'
        f'<text x="4" y="{pad}" font-size="10">{hi:.4g}</text>\n'
        f'<text x="4" y="{height - pad}" font-size="10">{lo:.4g}</text>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="1" points="{pts}"/>\n'
        "</svg>\n"
    )


def write_svg(path, values, title: str = ""):
    with open(path, "w") as fh:
        fh.write(svg_line_chart(values, title))
