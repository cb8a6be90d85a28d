"""Minimal static SVG line and scatter plots.

Deliberately tiny: one polyline element per trace, one circle per scatter
point, a frame, and axis labels.  The viewport is computed from the data
extents.  Files are plain well-formed XML built with ElementTree, suitable
for batch artifact directories where a plotting stack is unwelcome.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Optional, Sequence

import numpy as np

__all__ = ["line_plot", "scatter_plot"]

_WIDTH = 640
_HEIGHT = 480
_MARGIN = 50
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _extent(arrays: Sequence[np.ndarray]):
    stacked = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    lo = float(np.min(stacked))
    hi = float(np.max(stacked))
    if hi == lo:
        lo -= 0.5
        hi += 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _scaler(lo, hi, out_lo, out_hi):
    span = hi - lo

    def to_px(v):
        return out_lo + (np.asarray(v, dtype=float) - lo) * (out_hi - out_lo) / span

    return to_px


def _canvas(title: str, xlabel: str, ylabel: str) -> ET.Element:
    root = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(_WIDTH),
            "height": str(_HEIGHT),
            "viewBox": f"0 0 {_WIDTH} {_HEIGHT}",
        },
    )
    ET.SubElement(
        root,
        "rect",
        {
            "x": str(_MARGIN),
            "y": str(_MARGIN),
            "width": str(_WIDTH - 2 * _MARGIN),
            "height": str(_HEIGHT - 2 * _MARGIN),
            "fill": "white",
            "stroke": "black",
        },
    )
    if title:
        t = ET.SubElement(
            root,
            "text",
            {"x": str(_WIDTH // 2), "y": str(_MARGIN // 2 + 6), "text-anchor": "middle"},
        )
        t.text = title
    if xlabel:
        t = ET.SubElement(
            root,
            "text",
            {"x": str(_WIDTH // 2), "y": str(_HEIGHT - 12), "text-anchor": "middle"},
        )
        t.text = xlabel
    if ylabel:
        t = ET.SubElement(
            root,
            "text",
            {
                "x": "16",
                "y": str(_HEIGHT // 2),
                "text-anchor": "middle",
                "transform": f"rotate(-90 16 {_HEIGHT // 2})",
            },
        )
        t.text = ylabel
    return root


def _write(root: ET.Element, path) -> None:
    ET.ElementTree(root).write(path, encoding="unicode", xml_declaration=True)


def line_plot(
    path,
    traces: Sequence,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    colors: Optional[Sequence[str]] = None,
) -> None:
    """Polyline plot; ``traces`` is a sequence of (x, y) array pairs."""
    xs = [np.asarray(t[0], dtype=float) for t in traces]
    ys = [np.asarray(t[1], dtype=float) for t in traces]
    x_lo, x_hi = _extent(xs)
    y_lo, y_hi = _extent(ys)
    px = _scaler(x_lo, x_hi, _MARGIN, _WIDTH - _MARGIN)
    py = _scaler(y_lo, y_hi, _HEIGHT - _MARGIN, _MARGIN)  # y axis points up
    root = _canvas(title, xlabel, ylabel)
    for i, (x, y) in enumerate(zip(xs, ys)):
        pts = " ".join(
            f"{xv:.2f},{yv:.2f}" for xv, yv in zip(px(x), py(y))
        )
        ET.SubElement(
            root,
            "polyline",
            {
                "points": pts,
                "fill": "none",
                "stroke": (colors or _PALETTE)[i % len(colors or _PALETTE)],
                "stroke-width": "1",
            },
        )
    _write(root, path)


def scatter_plot(
    path,
    groups: Sequence,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    colors: Optional[Sequence[str]] = None,
    radius: float = 1.2,
) -> None:
    """Scatter plot; ``groups`` is a sequence of (x, y) array pairs, one
    colour per group."""
    xs = [np.asarray(g[0], dtype=float) for g in groups]
    ys = [np.asarray(g[1], dtype=float) for g in groups]
    x_lo, x_hi = _extent(xs)
    y_lo, y_hi = _extent(ys)
    px = _scaler(x_lo, x_hi, _MARGIN, _WIDTH - _MARGIN)
    py = _scaler(y_lo, y_hi, _HEIGHT - _MARGIN, _MARGIN)
    root = _canvas(title, xlabel, ylabel)
    for i, (x, y) in enumerate(zip(xs, ys)):
        color = (colors or _PALETTE)[i % len(colors or _PALETTE)]
        for xv, yv in zip(px(x), py(y)):
            ET.SubElement(
                root,
                "circle",
                {
                    "cx": f"{xv:.2f}",
                    "cy": f"{yv:.2f}",
                    "r": str(radius),
                    "fill": color,
                    "stroke": "none",
                },
            )
    _write(root, path)
