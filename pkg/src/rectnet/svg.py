"""Deterministic SVG drawing of a simulated network."""

from __future__ import annotations

from pathlib import Path

from .planar import traced_segments


def _num(x: float) -> str:
    return repr(float(x))


def svg_lines(state, t: float, viewport: float | None = None) -> list[tuple[float, float, float, float, str]]:
    """Line segments to draw, in math coordinates, with a css class each.

    The two quadrant axes come first, clipped to ``[0, viewport]``; then one
    line per branch portion traced by ``t``.  Branches of depth 1 run along
    the x-axis and are already covered by the boundary line.
    """
    v = float(viewport if viewport is not None else max(t, 1.0))
    out = [(0.0, 0.0, 0.0, -v, "boundary"), (0.0, 0.0, v, 0.0, "boundary")]
    for u, (x0, y0), (x1, y1) in traced_segments(state, t):
        if len(u) < 2:
            continue
        out.append((x0, y0, x1, y1, "branch"))
    return out


def render_svg(state, t: float, path=None, viewport: float | None = None, size: int = 800) -> str:
    """SVG document for the network at time ``t``; written to ``path`` if given.

    The y coordinate is negated for display so the quadrant hangs below the x axis.
    """
    lines = svg_lines(state, t, viewport)
    v = float(viewport if viewport is not None else max(t, 1.0))
    stroke = v / size
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {_num(v)} {_num(v)}">',
        f'<g fill="none" stroke="black" stroke-width="{_num(stroke)}">',
    ]
    for x0, y0, x1, y1, cls in lines:
        parts.append(f'<line class="{cls}" x1="{_num(x0)}" y1="{_num(-y0 + 0.0)}" '
                     f'x2="{_num(x1)}" y2="{_num(-y1 + 0.0)}"/>')
    parts += ["</g>", "</svg>", ""]
    doc = "\n".join(parts)
    if path is not None:
        Path(path).write_text(doc, encoding="utf-8")
    return doc
