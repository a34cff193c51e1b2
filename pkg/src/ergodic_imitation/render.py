"""Static SVG rendering of a maze episode.

Pure string assembly: fixed float formatting, no drawing library, so the
same inputs always produce the same bytes. Workspace coordinates map to a
square canvas with y flipped (SVG's y axis points down).
"""

from __future__ import annotations

import numpy as np

from .geometry import Trajectory
from .harness import EpisodeTrace
from .maze import MazeLayout

_SIZE = 600.0


def _px(x: float) -> str:
    return f"{x * _SIZE:.4f}"


def _py(y: float) -> str:
    return f"{(1.0 - y) * _SIZE:.4f}"


def _polyline(points: np.ndarray, color: str, width: float, dash: str | None = None) -> str:
    coords = " ".join(f"{_px(p[0])},{_py(p[1])}" for p in points)
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash_attr} '
        f'points="{coords}"/>'
    )


def render_svg(
    trace: EpisodeTrace,
    layout: MazeLayout,
    path: str,
    demo: Trajectory | None = None,
    particles: list[tuple] | None = None,
) -> None:
    """Write walls, clutter, goal, demonstration, executed path and optional
    particle snapshots as a standalone SVG file."""
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_SIZE)}" height="{int(_SIZE)}" '
        f'viewBox="0 0 {int(_SIZE)} {int(_SIZE)}">',
        f'<rect x="0" y="0" width="{int(_SIZE)}" height="{int(_SIZE)}" fill="#ffffff" stroke="#000000"/>',
    ]
    for r in layout.solid_rects():
        parts.append(
            f'<rect x="{_px(r.x_min)}" y="{_py(r.y_max)}" '
            f'width="{(r.x_max - r.x_min) * _SIZE:.4f}" height="{(r.y_max - r.y_min) * _SIZE:.4f}" '
            f'fill="#444444"/>'
        )
    parts.append(
        f'<circle cx="{_px(layout.goal_center[0])}" cy="{_py(layout.goal_center[1])}" '
        f'r="{layout.goal_radius * _SIZE:.4f}" fill="#7ec97e" fill-opacity="0.6" stroke="#2d7a2d"/>'
    )
    parts.append(
        f'<circle cx="{_px(layout.start[0])}" cy="{_py(layout.start[1])}" r="4" fill="#1f4f9f"/>'
    )
    if particles:
        for _, pts in particles:
            for p in pts:
                parts.append(
                    f'<circle cx="{_px(p[0])}" cy="{_py(p[1])}" r="1.2" '
                    f'fill="#c9a13b" fill-opacity="0.45"/>'
                )
    if demo is not None:
        parts.append(_polyline(demo.states, "#1f4f9f", 1.5, dash="6,4"))
    if trace.rows:
        executed = np.array([r.x for r in trace.rows])
        parts.append(_polyline(executed, "#b03030", 2.0))
    parts.append("</svg>")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(parts) + "\n")
