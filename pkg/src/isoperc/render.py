"""Deterministic SVG 1.1 pictures of tilings, graphs and configurations.

Coordinates are formatted with fixed precision and elements are emitted in
index order, so rendering the same object twice gives identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ValidationError

__all__ = [
    "RenderStyle",
    "render_configuration",
    "render_graph",
    "render_tiling",
]

# muted qualitative palette, recycled for clusters and tracks
_PALETTE = (
    "#4e79a7",
    "#f28e2b",
    "#e15759",
    "#76b7b2",
    "#59a14f",
    "#edc948",
    "#b07aa1",
    "#ff9da7",
    "#9c755f",
    "#bab0ac",
)


@dataclass(frozen=True)
class RenderStyle:
    scale: float = 24.0
    margin: float = 1.0
    background: str = "#ffffff"
    stroke: str = "#2b2b2b"
    stroke_width: float = 1.1
    fill: str = "#f5f2ea"
    open_colour: str = "#d7263d"
    closed_colour: str = "#d8d8d8"
    vertex_colour: str = "#2b2b2b"
    vertex_radius: float = 2.2
    show_vertices: bool = True
    palette: tuple[str, ...] = field(default=_PALETTE)

    def __post_init__(self):
        if self.scale <= 0:
            raise ValidationError("scale must be positive")
        if not self.palette:
            raise ValidationError("palette must not be empty")


def _fmt(value: float) -> str:
    text = f"{value:.3f}"
    return "0.000" if text == "-0.000" else text


class _Canvas:
    """Maps patch coordinates to pixels, flipping y for screen orientation."""

    def __init__(self, points: np.ndarray, style: RenderStyle):
        if len(points) == 0:
            raise ValidationError("nothing to render")
        lo = points.min(axis=0) - style.margin
        hi = points.max(axis=0) + style.margin
        self.x0 = float(lo[0])
        self.y1 = float(hi[1])
        self.scale = style.scale
        self.width = (float(hi[0]) - float(lo[0])) * style.scale
        self.height = (float(hi[1]) - float(lo[1])) * style.scale

    def to_px(self, point) -> tuple[float, float]:
        return (
            (float(point[0]) - self.x0) * self.scale,
            (self.y1 - float(point[1])) * self.scale,
        )

    def pair(self, point) -> str:
        x, y = self.to_px(point)
        return f"{_fmt(x)},{_fmt(y)}"


def _document(canvas: _Canvas, style: RenderStyle, body: list[str]) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_fmt(canvas.width)}" height="{_fmt(canvas.height)}" '
        f'viewBox="0 0 {_fmt(canvas.width)} {_fmt(canvas.height)}">\n'
        f'<rect width="100%" height="100%" fill="{style.background}"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def render_tiling(tiling, style: RenderStyle | None = None, tracks: bool = False) -> str:
    """One polygon per rhombus; with tracks=True, one polyline per track."""
    style = style or RenderStyle()
    corners = tiling.corners()
    canvas = _Canvas(corners.reshape(-1, 2), style)
    body = []
    for i in range(tiling.n_rhombi):
        pts = " ".join(canvas.pair(c) for c in corners[i])
        body.append(
            f'<polygon class="rhombus" points="{pts}" fill="{style.fill}" '
            f'stroke="{style.stroke}" stroke-width="{_fmt(style.stroke_width)}"/>'
        )
    if tracks:
        from .tiling import extract_tracks

        centres = tiling.base + (tiling.dir_a + tiling.dir_b) / 2.0
        for k, track in enumerate(extract_tracks(tiling)):
            colour = style.palette[k % len(style.palette)]
            pts = " ".join(canvas.pair(centres[r]) for r in track.rhombi)
            body.append(
                f'<polyline class="track" points="{pts}" fill="none" '
                f'stroke="{colour}" stroke-width="{_fmt(2 * style.stroke_width)}"/>'
            )
    return _document(canvas, style, body)


def _edge_lines(g, canvas, colours, widths, classes):
    lines = []
    for e in range(g.n_edges):
        u, v = g.edges[e]
        x1, y1 = canvas.to_px(g.vertices[u])
        x2, y2 = canvas.to_px(g.vertices[v])
        lines.append(
            f'<line class="{classes[e]}" x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
            f'x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="{colours[e]}" '
            f'stroke-width="{_fmt(widths[e])}"/>'
        )
    return lines


def _vertex_dots(g, canvas, style):
    dots = []
    for v in range(g.n_vertices):
        x, y = canvas.to_px(g.vertices[v])
        dots.append(
            f'<circle class="vertex" cx="{_fmt(x)}" cy="{_fmt(y)}" '
            f'r="{_fmt(style.vertex_radius)}" fill="{style.vertex_colour}"/>'
        )
    return dots


def render_graph(g, style: RenderStyle | None = None) -> str:
    style = style or RenderStyle()
    canvas = _Canvas(g.vertices, style)
    colours = [style.stroke] * g.n_edges
    widths = [style.stroke_width] * g.n_edges
    classes = ["edge"] * g.n_edges
    body = _edge_lines(g, canvas, colours, widths, classes)
    if style.show_vertices:
        body += _vertex_dots(g, canvas, style)
    return _document(canvas, style, body)


def render_configuration(
    g, config, style: RenderStyle | None = None, clusters: bool = False
) -> str:
    """Open edges drawn bold (class "open"), colour-coded by cluster label."""
    style = style or RenderStyle()
    open_state = np.asarray(config.open, dtype=bool)
    if len(open_state) != g.n_edges:
        raise ValidationError("configuration does not match the edge count")
    canvas = _Canvas(g.vertices, style)
    colours = [style.closed_colour] * g.n_edges
    widths = [style.stroke_width] * g.n_edges
    classes = ["closed"] * g.n_edges
    if clusters:
        labels, _ = _kernels.label_components(
            g.n_vertices,
            np.ascontiguousarray(g.edges[:, 0]),
            np.ascontiguousarray(g.edges[:, 1]),
            np.ascontiguousarray(open_state),
        )
    for e in np.flatnonzero(open_state):
        if clusters:
            colours[e] = style.palette[int(labels[g.edges[e, 0]]) % len(style.palette)]
        else:
            colours[e] = style.open_colour
        widths[e] = 2.2 * style.stroke_width
        classes[e] = "open"
    body = _edge_lines(g, canvas, colours, widths, classes)
    if style.show_vertices:
        body += _vertex_dots(g, canvas, style)
    return _document(canvas, style, body)
