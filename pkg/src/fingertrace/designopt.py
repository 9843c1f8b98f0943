"""Derivative-free shaping of mirror and skin control points.

A design vector is the flattened list of control-point coordinates of
every curved reflective spline plus the skin, with a fixed-coordinate
mask (skin endpoints stay put by default).  Scores combine the minimum
imaging angle with soft quadratic penalties for coverage shortfall and
envelope overflow, and a Nelder-Mead simplex climbs them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .geometry import BSplineCurve, CircularArc, DegenerateGeometryError, GeometryDomainError
from .metrics import compute_metrics
from .scene import OpticalSurface, Reflective, SensorScene, trace_all

__all__ = [
    "DesignVector",
    "DesignObjective",
    "HistoryEntry",
    "design_vector_from_scene",
    "scene_with_design",
    "score",
    "score_components",
    "optimize",
    "nelder_mead_max",
]

PENALTY_SCORE = -1.0e6


@dataclass(frozen=True)
class DesignVector:
    """Flattened (x0, y0, x1, y1, ...) coordinates plus a fixed mask."""

    values: tuple[float, ...]
    fixed: tuple[bool, ...]

    def __post_init__(self):
        if len(self.values) % 2 != 0:
            raise ValueError("design vector length must be even (x, y pairs)")
        if len(self.values) != len(self.fixed):
            raise ValueError("mask length must match values")

    @property
    def free_indices(self) -> tuple[int, ...]:
        return tuple(i for i, fx in enumerate(self.fixed) if not fx)

    def free_values(self) -> np.ndarray:
        return np.array([self.values[i] for i in self.free_indices])

    def with_free_values(self, free: np.ndarray) -> "DesignVector":
        vals = list(self.values)
        for i, v in zip(self.free_indices, free):
            vals[i] = float(v)
        return replace(self, values=tuple(vals))


@dataclass(frozen=True)
class DesignObjective:
    """score = w_angle * min_angle_deg - w_cov * (1-coverage)^2 - w_env * overflow^2."""

    weight_min_angle: float = 1.0
    weight_coverage: float = 100.0
    weight_envelope: float = 100.0
    max_length: float = 83.5
    max_width: float = 18.8   # cross-section transverse limit (average thickness)

    def combine(self, min_angle_deg: float, coverage: float, envelope_violation: float) -> float:
        return (self.weight_min_angle * min_angle_deg
                - self.weight_coverage * (1.0 - coverage) ** 2
                - self.weight_envelope * envelope_violation ** 2)


@dataclass(frozen=True)
class HistoryEntry:
    evaluation: int
    score: float
    coverage: float
    min_angle_deg: float


def _movable_splines(scene: SensorScene) -> list[tuple[str, int]]:
    """(slot, surface index) for every design-relevant spline, stable order.

    Curved reflective splines (degree >= 2) first, then the skin.  Straight
    segments, arcs and refractive surfaces are structural, not designable.
    """
    slots: list[tuple[str, int]] = []
    for i, surf in enumerate(scene.surfaces):
        geom = surf.geometry
        if isinstance(surf.kind, Reflective) or surf.kind is Reflective:
            if isinstance(geom, BSplineCurve) and geom.degree >= 2:
                slots.append(("surface", i))
    slots.append(("skin", -1))
    return slots


def design_vector_from_scene(scene: SensorScene,
                             fix_skin_endpoints: bool = True) -> DesignVector:
    """Extract the movable control points of a scene into a design vector."""
    values: list[float] = []
    fixed: list[bool] = []
    for slot, idx in _movable_splines(scene):
        curve = scene.skin if slot == "skin" else scene.surfaces[idx].geometry
        n = len(curve.control_points)
        for j, p in enumerate(curve.control_points):
            is_end = j in (0, n - 1)
            fx = fix_skin_endpoints and slot == "skin" and is_end
            values.extend((p.x, p.y))
            fixed.extend((fx, fx))
    return DesignVector(tuple(values), tuple(fixed))


def scene_with_design(base_scene: SensorScene, design: DesignVector) -> SensorScene:
    """Rebuild the scene with the design's control points swapped in."""
    it = iter(design.values)

    def rebuild(curve: BSplineCurve) -> BSplineCurve:
        pts = [(next(it), next(it)) for _ in curve.control_points]
        return BSplineCurve(curve.degree, pts, curve.knots)

    surfaces = list(base_scene.surfaces)
    skin = base_scene.skin
    for slot, idx in _movable_splines(base_scene):
        if slot == "surface":
            old = surfaces[idx]
            surfaces[idx] = OpticalSurface(rebuild(old.geometry), old.kind, old.name)
        else:
            skin = rebuild(skin)
    remaining = sum(1 for _ in it)
    if remaining:
        raise ValueError(f"design vector has {remaining} extra coordinates")
    return SensorScene(base_scene.camera, surfaces, skin, base_scene.envelope)


def _scene_bbox(scene: SensorScene) -> tuple[float, float]:
    xs = [scene.camera.pinhole.x]
    ys = [scene.camera.pinhole.y]
    geoms = [s.geometry for s in scene.surfaces] + [scene.skin]
    for g in geoms:
        if isinstance(g, CircularArc):
            xs.extend((g.center.x - g.radius, g.center.x + g.radius))
            ys.extend((g.center.y - g.radius, g.center.y + g.radius))
        else:
            xs.extend(p.x for p in g.control_points)
            ys.extend(p.y for p in g.control_points)
    return max(xs) - min(xs), max(ys) - min(ys)


@dataclass(frozen=True)
class ScoreBreakdown:
    score: float
    coverage: float
    min_angle_deg: float
    envelope_violation: float


def score_components(design: DesignVector, base_scene: SensorScene,
                     objective: DesignObjective) -> ScoreBreakdown:
    """Score with its ingredients; undecodable designs get a flat penalty."""
    try:
        scene = scene_with_design(base_scene, design)
        traces = trace_all(scene)
        m = compute_metrics(traces, scene.skin)
        dx, dy = _scene_bbox(scene)
        violation = max(0.0, dx - objective.max_length) + max(0.0, dy - objective.max_width)
        total = objective.combine(m.min_imaging_angle, m.coverage, violation)
        return ScoreBreakdown(total, m.coverage, m.min_imaging_angle, violation)
    except (GeometryDomainError, DegenerateGeometryError, ValueError):
        return ScoreBreakdown(PENALTY_SCORE, 0.0, 0.0, float("inf"))


def score(design: DesignVector, base_scene: SensorScene, objective: DesignObjective) -> float:
    return score_components(design, base_scene, objective).score


# ---------------------------------------------------------------------------
# Nelder-Mead simplex (maximizing)
# ---------------------------------------------------------------------------

_REFLECT = 1.0
_EXPAND = 2.0
_CONTRACT = 0.5
_SHRINK = 0.5


def nelder_mead_max(f: Callable[[np.ndarray], float], x0: np.ndarray, step: float,
                    budget: int, seed: int = 0,
                    on_eval: Optional[Callable[[np.ndarray, float], None]] = None):
    """Maximize f with a Nelder-Mead simplex under an evaluation budget.

    Restarts once from the best point (jittered edge length) if the simplex
    collapses early.  Returns (best_x, best_f, evaluated_scores).
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    if budget < dim + 1:
        raise ValueError(f"budget must be at least dim+1 = {dim + 1}")
    rng = np.random.default_rng(seed)
    evals = 0
    history: list[float] = []
    best_x = x0.copy()
    best_f = -math.inf

    def call(x: np.ndarray) -> float:
        nonlocal evals, best_x, best_f
        v = f(x)
        evals += 1
        history.append(v)
        if on_eval is not None:
            on_eval(x, v)
        if v > best_f:
            best_f = v
            best_x = x.copy()
        return v

    def build_simplex(center: np.ndarray, edge: float):
        pts = [center.copy()]
        for i in range(dim):
            q = center.copy()
            q[i] += edge
            pts.append(q)
        vals = []
        for q in pts:
            if evals >= budget:
                break
            vals.append(call(q))
        return pts[:len(vals)], vals

    simplex, values = build_simplex(x0, step)
    restarts = 0
    while evals < budget and len(simplex) == dim + 1:
        order = sorted(range(dim + 1), key=lambda i: -values[i])
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]

        spread = values[0] - values[-1]
        diameter = max(np.linalg.norm(s - simplex[0]) for s in simplex[1:])
        if spread < 1e-10 * (1.0 + abs(values[0])) and diameter < 1e-9:
            if restarts >= 1:
                break
            restarts += 1
            edge = step * rng.uniform(0.3, 0.7)
            simplex, values = build_simplex(simplex[0], edge)
            continue

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = centroid + _REFLECT * (centroid - worst)
        fr = call(xr)
        if evals >= budget:
            break
        if fr > values[0]:
            xe = centroid + _EXPAND * (centroid - worst)
            fe = call(xe)
            if fe > fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr > values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr > values[-1]:
                xc = centroid + _CONTRACT * (xr - centroid)
            else:
                xc = centroid + _CONTRACT * (worst - centroid)
            fc = call(xc)
            if fc > max(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                # Shrink toward the best vertex.
                for i in range(1, dim + 1):
                    if evals >= budget:
                        break
                    simplex[i] = simplex[0] + _SHRINK * (simplex[i] - simplex[0])
                    values[i] = call(simplex[i])

    return best_x, best_f, history


def optimize(initial: DesignVector, base_scene: SensorScene, objective: DesignObjective,
             budget: int, seed: int = 0) -> tuple[DesignVector, list[HistoryEntry]]:
    """Budgeted simplex search over the free design coordinates.

    Returns the best design seen and the per-evaluation history
    (evaluation #, score, coverage, min imaging angle).
    """
    step = 0.05 * math.hypot(objective.max_length, objective.max_width)
    history: list[HistoryEntry] = []

    def f(free: np.ndarray) -> float:
        cand = initial.with_free_values(free)
        parts = score_components(cand, base_scene, objective)
        history.append(HistoryEntry(len(history), parts.score, parts.coverage,
                                    parts.min_angle_deg))
        return parts.score

    best_free, _, _ = nelder_mead_max(f, initial.free_values(), step, budget, seed)
    return initial.with_free_values(best_free), history
