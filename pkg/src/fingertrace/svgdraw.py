"""Deterministic SVG emitter for scene drawings.

Plain text output with a fixed millimeter-to-unit scale of 4 declared on
the root element, so visual regressions diff as text.  The y axis is
flipped (SVG grows downward, the scene grows upward).
"""

from __future__ import annotations

import math
from typing import Iterable

from .geometry import BSplineCurve, CircularArc
from .scene import Reflective, Refractive, SensorScene, SkinHit, TraceResult

MM_TO_UNIT = 4.0
_MARGIN_MM = 3.0

__all__ = ["SvgCanvas", "scene_drawing", "MM_TO_UNIT"]


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


class SvgCanvas:
    """Collects styled polylines/circles over a mm-coordinate viewport."""

    def __init__(self, x_min: float, y_min: float, x_max: float, y_max: float):
        self.x_min = x_min - _MARGIN_MM
        self.y_min = y_min - _MARGIN_MM
        self.x_max = x_max + _MARGIN_MM
        self.y_max = y_max + _MARGIN_MM
        self.elements: list[str] = []

    def _tx(self, x: float) -> float:
        return (x - self.x_min) * MM_TO_UNIT

    def _ty(self, y: float) -> float:
        return (self.y_max - y) * MM_TO_UNIT

    def polyline(self, points_mm: Iterable[tuple[float, float]], stroke: str,
                 width_mm: float = 0.15, dash: str | None = None,
                 css_class: str = "", opacity: float = 1.0):
        pts = " ".join(f"{_fmt(self._tx(x))},{_fmt(self._ty(y))}" for x, y in points_mm)
        attrs = [f'points="{pts}"', f'stroke="{stroke}"',
                 f'stroke-width="{_fmt(width_mm * MM_TO_UNIT)}"', 'fill="none"']
        if dash:
            attrs.append(f'stroke-dasharray="{dash}"')
        if css_class:
            attrs.append(f'class="{css_class}"')
        if opacity != 1.0:
            attrs.append(f'opacity="{_fmt(opacity)}"')
        self.elements.append(f"<polyline {' '.join(attrs)} />")

    def circle(self, center_mm: tuple[float, float], r_mm: float, fill: str,
               css_class: str = ""):
        cls = f' class="{css_class}"' if css_class else ""
        self.elements.append(
            f'<circle cx="{_fmt(self._tx(center_mm[0]))}" cy="{_fmt(self._ty(center_mm[1]))}"'
            f' r="{_fmt(r_mm * MM_TO_UNIT)}" fill="{fill}"{cls} />')

    def to_string(self) -> str:
        w = _fmt((self.x_max - self.x_min) * MM_TO_UNIT)
        h = _fmt((self.y_max - self.y_min) * MM_TO_UNIT)
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
                f'viewBox="0 0 {w} {h}" data-mm-to-unit="{_fmt(MM_TO_UNIT)}">\n'
                f"<!-- scale: 1 mm = {_fmt(MM_TO_UNIT)} drawing units -->\n")
        return head + "\n".join(self.elements) + "\n</svg>\n"


def _curve_polyline(geom, n: int = 120):
    if isinstance(geom, CircularArc):
        return [(geom.center.x + geom.radius * math.cos(a),
                 geom.center.y + geom.radius * math.sin(a))
                for a in [geom.start_angle + geom.span * i / (n - 1) for i in range(n)]]
    lo, hi = geom.domain
    pts = geom.evaluate_many([lo + (hi - lo) * i / (n - 1) for i in range(n)])
    return [(float(x), float(y)) for x, y in pts]


def scene_drawing(scene: SensorScene, traces: list[TraceResult]) -> str:
    """Surfaces, control polygons and the traced ray fan as one SVG."""
    xs: list[float] = [scene.camera.pinhole.x]
    ys: list[float] = [scene.camera.pinhole.y]
    curves = [s.geometry for s in scene.surfaces] + [scene.skin]
    for g in curves:
        for x, y in _curve_polyline(g, 24):
            xs.append(x)
            ys.append(y)
    for tr in traces:
        for node in tr.path:
            xs.append(node.point.x)
            ys.append(node.point.y)
    canvas = SvgCanvas(min(xs), min(ys), max(xs), max(ys))

    # Rays under the geometry: skin hits warm red, everything else faint.
    for tr in traces:
        pts = [(n.point.x, n.point.y) for n in tr.path]
        if len(pts) < 2:
            continue
        if isinstance(tr.terminal, SkinHit):
            canvas.polyline(pts, "#d04040", width_mm=0.06, css_class="ray ray-skin",
                            opacity=0.55)
        else:
            canvas.polyline(pts, "#b0b0b0", width_mm=0.05, dash="2,2",
                            css_class="ray ray-lost", opacity=0.5)

    for surf in scene.surfaces:
        geom = surf.geometry
        if isinstance(surf.kind, Refractive):
            color, cls = "#2e6fb0", "surface refractive"
        elif isinstance(surf.kind, Reflective) or surf.kind is Reflective:
            color, cls = "#74b8d8", "surface mirror"
        else:
            color, cls = "#404040", "surface absorbing"
        canvas.polyline(_curve_polyline(geom), color, width_mm=0.35, css_class=cls)
        if isinstance(geom, BSplineCurve) and geom.degree >= 2:
            ctrl = [(p.x, p.y) for p in geom.control_points]
            canvas.polyline(ctrl, color, width_mm=0.08, dash="1,2",
                            css_class="control-polygon")
            for p in ctrl:
                canvas.circle(p, 0.3, color, css_class="control-point")

    canvas.polyline(_curve_polyline(scene.skin), "#7a7a7a", width_mm=0.5,
                    css_class="surface skin")
    ctrl = [(p.x, p.y) for p in scene.skin.control_points]
    canvas.polyline(ctrl, "#7a7a7a", width_mm=0.08, dash="1,2", css_class="control-polygon")
    for p in ctrl:
        canvas.circle(p, 0.3, "#7a7a7a", css_class="control-point")

    canvas.circle((scene.camera.pinhole.x, scene.camera.pinhole.y), 0.5,
                  "#202020", css_class="camera")
    return canvas.to_string()
