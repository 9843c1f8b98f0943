"""Planar geometric primitives for the optical simulator.

Points, unit directions, clamped B-spline curves, circular arcs and rays,
plus the three interactions the tracer needs: intersection, mirror
reflection and Snell refraction.  All coordinates are millimeters; the
simulation plane is the finger's lengthwise cross-section.

Everything here is immutable after construction and safe to share
between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "GeometryDomainError",
    "DegenerateGeometryError",
    "Point2",
    "Dir2",
    "Ray",
    "BSplineCurve",
    "CircularArc",
    "TotalInternalReflection",
    "Intersection",
    "reflect",
    "refract",
    "intersect",
]

# Tolerances shared by the intersection machinery (millimeters).
INTERSECT_TOL = 1e-9
SELF_HIT_EPS = 1e-9
# Subdivision only isolates roots; Newton polishes them to INTERSECT_TOL.
_LEAF_WIDTH = 0.1
_MAX_SUBDIVISION_DEPTH = 64

_UNIT_TOL = 1e-12


class GeometryDomainError(ValueError):
    """Parameter outside a curve's domain, or invalid construction."""


class DegenerateGeometryError(ValueError):
    """Geometry too degenerate to operate on (zero tangent, runaway subdivision)."""


@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)

    def distance_to(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, slots=True)
class Dir2:
    """Unit direction; constructor enforces |d| = 1 within 1e-12."""

    x: float
    y: float

    def __post_init__(self):
        n = math.hypot(self.x, self.y)
        if abs(n - 1.0) > _UNIT_TOL:
            raise GeometryDomainError(f"direction ({self.x}, {self.y}) is not unit length")

    @staticmethod
    def from_xy(x: float, y: float) -> "Dir2":
        n = math.hypot(x, y)
        if n == 0.0:
            raise DegenerateGeometryError("cannot normalize the zero vector")
        return Dir2(x / n, y / n)

    @staticmethod
    def from_angle(theta: float) -> "Dir2":
        return Dir2(math.cos(theta), math.sin(theta))

    def dot(self, other: "Dir2") -> float:
        return self.x * other.x + self.y * other.y

    def perp(self) -> "Dir2":
        """This direction rotated +90 degrees."""
        return Dir2(-self.y, self.x)

    def angle(self) -> float:
        """Angle from the +x axis, radians in (-pi, pi]."""
        return math.atan2(self.y, self.x)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class Ray:
    """Half-line from origin along direction, travelling in a medium."""

    origin: Point2
    direction: Dir2
    medium_index: float = 1.0

    def __post_init__(self):
        if self.medium_index < 1.0:
            raise GeometryDomainError(f"medium index {self.medium_index} < 1")

    def point_at(self, t: float) -> Point2:
        return Point2(self.origin.x + t * self.direction.x,
                      self.origin.y + t * self.direction.y)


class TotalInternalReflection:
    """Marker result: refraction impossible, the ray reflects instead."""

    _instance: Optional["TotalInternalReflection"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TotalInternalReflection"


TIR = TotalInternalReflection()


def reflect(incoming: Dir2, surface_normal: Dir2) -> Dir2:
    """Mirror law: d - 2 (d.n) n.  Insensitive to the normal's sign."""
    k = 2.0 * (incoming.x * surface_normal.x + incoming.y * surface_normal.y)
    return Dir2(incoming.x - k * surface_normal.x, incoming.y - k * surface_normal.y)


def refract(incoming: Dir2, surface_normal: Dir2, n_from: float, n_to: float):
    """Vector Snell refraction from medium n_from into n_to.

    The normal may point to either side; it is flipped internally to face
    the incoming ray.  Returns a Dir2, or the TIR marker when
    sin(theta_t) would exceed 1.
    """
    if n_from < 1.0 or n_to < 1.0:
        raise GeometryDomainError("refractive indices must be >= 1")
    nx, ny = surface_normal.x, surface_normal.y
    cos_i = -(incoming.x * nx + incoming.y * ny)
    if cos_i < 0.0:
        nx, ny, cos_i = -nx, -ny, -cos_i
    eta = n_from / n_to
    sin2_t = eta * eta * max(0.0, 1.0 - cos_i * cos_i)
    if sin2_t > 1.0:
        return TIR
    cos_t = math.sqrt(1.0 - sin2_t)
    tx = eta * incoming.x + (eta * cos_i - cos_t) * nx
    ty = eta * incoming.y + (eta * cos_i - cos_t) * ny
    return Dir2.from_xy(tx, ty)


# ---------------------------------------------------------------------------
# B-spline curves
# ---------------------------------------------------------------------------

def clamped_uniform_knots(n_control: int, degree: int) -> tuple[float, ...]:
    """Default knot vector: clamped, uniform interior, domain [0, 1]."""
    n_interior = n_control - degree - 1
    interior = [(i + 1) / (n_interior + 1) for i in range(n_interior)]
    return tuple([0.0] * (degree + 1) + interior + [1.0] * (degree + 1))


class BSplineCurve:
    """Clamped planar B-spline, evaluated with de Boor's algorithm."""

    __slots__ = ("degree", "control_points", "knots", "_cx", "_cy", "__dict__")

    def __init__(self, degree: int, control_points: Sequence, knots: Optional[Sequence[float]] = None):
        if degree < 1:
            raise GeometryDomainError(f"degree must be >= 1, got {degree}")
        pts = tuple(
            p if isinstance(p, Point2) else Point2(float(p[0]), float(p[1]))
            for p in control_points
        )
        if any(not (math.isfinite(p.x) and math.isfinite(p.y)) for p in pts):
            raise GeometryDomainError("control points must be finite")
        if len(pts) < degree + 1:
            raise GeometryDomainError(
                f"need at least {degree + 1} control points for degree {degree}, got {len(pts)}")
        if knots is None:
            kv = clamped_uniform_knots(len(pts), degree)
        else:
            kv = tuple(float(k) for k in knots)
        if len(kv) != len(pts) + degree + 1:
            raise GeometryDomainError(
                f"knot vector must have {len(pts) + degree + 1} entries, got {len(kv)}")
        if any(kv[i] > kv[i + 1] for i in range(len(kv) - 1)):
            raise GeometryDomainError("knot vector must be non-decreasing")
        p = degree
        if kv[0] != kv[p] or kv[-1] != kv[-p - 1]:
            raise GeometryDomainError("knot vector must be clamped (end knots repeated degree+1 times)")
        if kv[p] == kv[-p - 1]:
            raise GeometryDomainError("empty parameter domain")
        self.degree = degree
        self.control_points = pts
        self.knots = kv
        self._cx = [q.x for q in pts]
        self._cy = [q.y for q in pts]

    @staticmethod
    def line(p0, p1) -> "BSplineCurve":
        """Straight segment as a degree-1 spline over [0, 1]."""
        return BSplineCurve(1, [p0, p1], [0.0, 0.0, 1.0, 1.0])

    @property
    def domain(self) -> tuple[float, float]:
        p = self.degree
        return (self.knots[p], self.knots[-p - 1])

    def _check_t(self, t: float) -> float:
        lo, hi = self.domain
        if not (lo <= t <= hi):
            raise GeometryDomainError(f"parameter {t} outside domain [{lo}, {hi}]")
        return t

    def _find_span(self, t: float) -> int:
        """Index k with knots[k] <= t < knots[k+1] (last span at the right end)."""
        U = self.knots
        p = self.degree
        hi = len(self.control_points)  # == len(U) - p - 1
        if t >= U[hi]:
            k = hi - 1
            while U[k] == U[k + 1]:
                k -= 1
            return k
        lo = p
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if t < U[mid]:
                hi = mid
            else:
                lo = mid
        return lo

    def evaluate(self, t: float) -> Point2:
        """Point on the curve at parameter t (de Boor recurrence)."""
        self._check_t(t)
        x, y = self._evaluate_raw(t)
        return Point2(x, y)

    def _evaluate_raw(self, t: float) -> tuple[float, float]:
        p = self.degree
        U = self.knots
        k = self._find_span(t)
        dx = self._cx[k - p:k + 1][:]
        dy = self._cy[k - p:k + 1][:]
        for r in range(1, p + 1):
            for j in range(p, r - 1, -1):
                i = k - p + j
                denom = U[i + p - r + 1] - U[i]
                a = 0.0 if denom == 0.0 else (t - U[i]) / denom
                dx[j] = (1.0 - a) * dx[j - 1] + a * dx[j]
                dy[j] = (1.0 - a) * dy[j - 1] + a * dy[j]
        return dx[p], dy[p]

    def evaluate_many(self, ts) -> np.ndarray:
        """Vectorized evaluate: (N,) parameters -> (N, 2) points."""
        ts = np.asarray(ts, dtype=float)
        lo, hi = self.domain
        if ts.size and (ts.min() < lo or ts.max() > hi):
            raise GeometryDomainError("parameter outside domain")
        out = np.empty((ts.size, 2))
        flat = ts.ravel()
        spans = np.array([self._find_span(t) for t in flat])
        U = self.knots
        p = self.degree
        cx = np.asarray(self._cx)
        cy = np.asarray(self._cy)
        for k in np.unique(spans):
            sel = spans == k
            u = flat[sel]
            dx = np.stack([np.full(u.shape, cx[k - p + j]) for j in range(p + 1)])
            dy = np.stack([np.full(u.shape, cy[k - p + j]) for j in range(p + 1)])
            for r in range(1, p + 1):
                for j in range(p, r - 1, -1):
                    i = k - p + j
                    denom = U[i + p - r + 1] - U[i]
                    a = np.zeros_like(u) if denom == 0.0 else (u - U[i]) / denom
                    dx[j] = (1.0 - a) * dx[j - 1] + a * dx[j]
                    dy[j] = (1.0 - a) * dy[j - 1] + a * dy[j]
            out[sel, 0] = dx[p]
            out[sel, 1] = dy[p]
        return out

    @cached_property
    def _derivative_curve(self) -> Optional["BSplineCurve"]:
        """Hodograph: degree-1 lower spline whose value is C'(t)."""
        p = self.degree
        U = self.knots
        P = self.control_points
        if p == 1:
            return None  # constant derivative, handled directly
        q: list[Point2] = []
        for i in range(len(P) - 1):
            denom = U[i + p + 1] - U[i + 1]
            if denom == 0.0:
                q.append(Point2(0.0, 0.0))
            else:
                s = p / denom
                q.append(Point2(s * (P[i + 1].x - P[i].x), s * (P[i + 1].y - P[i].y)))
        return BSplineCurve(p - 1, q, U[1:-1])

    def derivative(self, t: float) -> tuple[float, float]:
        """dC/dt at t, as a raw (x, y) pair."""
        self._check_t(t)
        if self.degree == 1:
            k = self._find_span(t)
            denom = self.knots[k + 1] - self.knots[k]
            return ((self._cx[k] - self._cx[k - 1]) / denom,
                    (self._cy[k] - self._cy[k - 1]) / denom)
        return self._derivative_curve._evaluate_raw(t)

    def derivative_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.degree == 1:
            return np.stack([np.array(self.derivative(t)) for t in ts.ravel()])
        return self._derivative_curve.evaluate_many(ts)

    def tangent_normal(self, t: float) -> tuple[Dir2, Dir2]:
        """Unit tangent and its +90-degree rotation at t.

        Raises DegenerateGeometryError when the derivative vanishes.
        """
        dx, dy = self.derivative(t)
        n = math.hypot(dx, dy)
        if n < 1e-12:
            raise DegenerateGeometryError(f"zero derivative at t={t}")
        tangent = Dir2(dx / n, dy / n)
        return tangent, tangent.perp()

    # -- Bezier decomposition (used by the subdivision intersector) --------

    def _insert_knot(self, u: float) -> "BSplineCurve":
        """Boehm single knot insertion; returns a new curve, same shape."""
        p = self.degree
        U = list(self.knots)
        P = self.control_points
        k = self._find_span(u)
        q: list[Point2] = []
        for i in range(len(P) + 1):
            if i <= k - p:
                q.append(P[i])
            elif i <= k:
                denom = U[i + p] - U[i]
                a = 0.0 if denom == 0.0 else (u - U[i]) / denom
                q.append(Point2((1 - a) * P[i - 1].x + a * P[i].x,
                                (1 - a) * P[i - 1].y + a * P[i].y))
            else:
                q.append(P[i - 1])
        newU = U[:k + 1] + [u] + U[k + 1:]
        return BSplineCurve(p, q, newU)

    @cached_property
    def bezier_segments(self) -> tuple[tuple[float, float, tuple[tuple[float, float], ...]], ...]:
        """(t_lo, t_hi, control points) per knot span, in Bezier form."""
        p = self.degree
        cur = self
        # Raise every interior knot to multiplicity p.
        while True:
            U = cur.knots
            counts: dict[float, int] = {}
            for u in U[p + 1:-p - 1]:
                counts[u] = counts.get(u, 0) + 1
            todo = [u for u, c in counts.items() if c < p]
            if not todo:
                break
            cur = cur._insert_knot(min(todo))
        U = cur.knots
        segs = []
        breaks = sorted(set(U))
        P = cur.control_points
        for i in range(len(breaks) - 1):
            segs.append((breaks[i], breaks[i + 1],
                         tuple((q.x, q.y) for q in P[i * p:i * p + p + 1])))
        return tuple(segs)

    # -- Arc length ---------------------------------------------------------

    @cached_property
    def _arclength_panels(self):
        """Adaptive Gauss panels: (breakpoints, cumulative lengths)."""
        lo, hi = self.domain
        panels: list[tuple[float, float]] = []

        def refine(a: float, b: float, depth: int):
            coarse = _gauss_length(self, a, b, _G8)
            fine = _gauss_length(self, a, b, _G16)
            if abs(fine - coarse) < 1e-7 + 1e-10 * fine or depth >= 40:
                panels.append((a, b))
                return
            m = 0.5 * (a + b)
            refine(a, m, depth + 1)
            refine(m, b, depth + 1)

        # Split at knot spans first so kinks land on panel edges.
        spans = sorted(set(k for k in self.knots if lo <= k <= hi))
        for a, b in zip(spans[:-1], spans[1:]):
            if b > a:
                refine(a, b, 0)
        breaks = [panels[0][0]] + [b for _, b in panels]
        cum = [0.0]
        for a, b in panels:
            cum.append(cum[-1] + _gauss_length(self, a, b, _G16))
        return np.array(breaks), np.array(cum)

    def arc_length(self, t: Optional[float] = None) -> float:
        """Arc length from the domain start to t (whole curve when t is None)."""
        breaks, cum = self._arclength_panels
        if t is None:
            return float(cum[-1])
        self._check_t(t)
        i = int(np.searchsorted(breaks, t, side="right") - 1)
        i = max(0, min(i, len(cum) - 2))
        return float(cum[i] + _gauss_length(self, breaks[i], t, _G16))

    def arc_length_many(self, ts) -> np.ndarray:
        """Vectorized arc_length for many parameters at once."""
        breaks, cum = self._arclength_panels
        ts = np.asarray(ts, dtype=float)
        if ts.size == 0:
            return np.zeros(0)
        lo, hi = self.domain
        if ts.min() < lo or ts.max() > hi:
            raise GeometryDomainError("parameter outside domain")
        idx = np.clip(np.searchsorted(breaks, ts, side="right") - 1, 0, len(cum) - 2)
        a = breaks[idx]
        half = 0.5 * (ts - a)
        nodes = half[:, None] * _G16[0][None, :] + (0.5 * (ts + a))[:, None]
        d = self.derivative_many(nodes.ravel()).reshape(ts.size, 16, 2)
        speed = np.hypot(d[..., 0], d[..., 1])
        return cum[idx] + half * (speed * _G16[1][None, :]).sum(axis=1)


_G8 = np.polynomial.legendre.leggauss(8)
_G16 = np.polynomial.legendre.leggauss(16)


def _gauss_length(curve: BSplineCurve, a: float, b: float, rule) -> float:
    if b <= a:
        return 0.0
    nodes, weights = rule
    ts = 0.5 * (b - a) * nodes + 0.5 * (a + b)
    d = curve.derivative_many(ts)
    return 0.5 * (b - a) * float(np.sum(weights * np.hypot(d[:, 0], d[:, 1])))


# ---------------------------------------------------------------------------
# Circular arcs
# ---------------------------------------------------------------------------

class CircularArc:
    """Arc of a circle, parameterized by angle from +x, counter-clockwise."""

    __slots__ = ("center", "radius", "start_angle", "span")

    def __init__(self, center, radius: float, start_angle: float, span: float):
        if radius <= 0.0:
            raise GeometryDomainError(f"radius must be positive, got {radius}")
        if not (0.0 < span <= 2.0 * math.pi + 1e-12):
            raise GeometryDomainError(f"span must be in (0, 2*pi], got {span}")
        self.center = center if isinstance(center, Point2) else Point2(*center)
        self.radius = float(radius)
        self.start_angle = float(start_angle)
        self.span = float(span)

    def point_at(self, phi: float) -> Point2:
        return Point2(self.center.x + self.radius * math.cos(phi),
                      self.center.y + self.radius * math.sin(phi))

    def normal_at(self, phi: float) -> Dir2:
        """Outward radial direction at angle phi."""
        return Dir2(math.cos(phi), math.sin(phi))

    def tangent_at(self, phi: float) -> Dir2:
        return Dir2(-math.sin(phi), math.cos(phi))

    def contains_angle(self, phi: float, eps: float = 1e-12) -> bool:
        rel = (phi - self.start_angle) % (2.0 * math.pi)
        return rel <= self.span + eps or rel >= 2.0 * math.pi - eps

    def tangent_normal(self, phi: float) -> tuple[Dir2, Dir2]:
        """Counter-clockwise tangent and outward normal at angle phi."""
        return self.tangent_at(phi), self.normal_at(phi)

    def arc_length(self, phi: Optional[float] = None) -> float:
        """Arc length from the start angle to phi (whole arc when None)."""
        if phi is None:
            return self.radius * self.span
        rel = (phi - self.start_angle) % (2.0 * math.pi)
        if rel > self.span + 1e-9:
            raise GeometryDomainError(f"angle {phi} outside the arc span")
        return self.radius * min(rel, self.span)

    def arc_length_many(self, phis) -> np.ndarray:
        return np.array([self.arc_length(float(p)) for p in np.asarray(phis).ravel()])


Surface = Union[BSplineCurve, CircularArc]


@dataclass(frozen=True, slots=True)
class Intersection:
    """Nearest forward ray/surface hit."""

    t_ray: float          # distance along the ray, mm
    t_surface: float      # curve parameter or arc angle
    point: Point2


def intersect(ray: Ray, surface: Surface, min_t: float = SELF_HIT_EPS) -> Optional[Intersection]:
    """Nearest intersection with t_ray > min_t, or None.

    Arcs are solved in closed form.  Splines use recursive subdivision of
    the Bezier control polygons with convex-hull pruning, then Newton /
    bisection refinement of the perpendicular-distance root to < 1e-9 mm.
    """
    if isinstance(surface, CircularArc):
        return _intersect_arc(ray, surface, min_t)
    return _intersect_spline(ray, surface, min_t)


def _intersect_arc(ray: Ray, arc: CircularArc, min_t: float) -> Optional[Intersection]:
    ox = ray.origin.x - arc.center.x
    oy = ray.origin.y - arc.center.y
    dx, dy = ray.direction.x, ray.direction.y
    b = ox * dx + oy * dy
    c = ox * ox + oy * oy - arc.radius * arc.radius
    disc = b * b - c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    best = None
    for t in (-b - sq, -b + sq):
        if t <= min_t:
            continue
        px = ox + t * dx
        py = oy + t * dy
        phi = math.atan2(py, px)
        if arc.contains_angle(phi):
            if best is None or t < best[0]:
                best = (t, phi)
    if best is None:
        return None
    t, phi = best
    return Intersection(t, phi, arc.point_at(phi))


def _intersect_spline(ray: Ray, curve: BSplineCurve, min_t: float) -> Optional[Intersection]:
    ox, oy = ray.origin.x, ray.origin.y
    dx, dy = ray.direction.x, ray.direction.y
    # Perpendicular (signed distance) and forward coordinates of a point.
    px, py = -dy, dx

    if curve.degree == 1 and len(curve.control_points) == 2:
        return _intersect_segment(ray, curve, min_t)

    candidates: list[tuple[float, float]] = []  # (t_ray, t_curve)

    def leaf(t_lo, t_hi, d_lo, d_hi):
        root = None
        if d_lo == 0.0:
            root = t_lo
        elif d_hi == 0.0:
            root = t_hi
        elif (d_lo < 0.0) != (d_hi < 0.0):
            frac = d_lo / (d_lo - d_hi)
            root = t_lo + frac * (t_hi - t_lo)
        if root is None:
            # Near-tangent leaf: try Newton from the middle, keep only true roots.
            root = 0.5 * (t_lo + t_hi)
            refined = _refine_root(curve, root, ox, oy, px, py, None)
        else:
            refined = _refine_root(curve, root, ox, oy, px, py, (t_lo, t_hi, d_lo, d_hi))
        if refined is None:
            return
        qx, qy = curve._evaluate_raw(refined)
        s = (qx - ox) * dx + (qy - oy) * dy
        if s > min_t:
            candidates.append((s, refined))

    stack = [(t_lo, t_hi, [c[0] for c in ctrl], [c[1] for c in ctrl], 0)
             for t_lo, t_hi, ctrl in curve.bezier_segments]
    while stack:
        t_lo, t_hi, cxs, cys, depth = stack.pop()
        d_min = d_max = (cxs[0] - ox) * px + (cys[0] - oy) * py
        d_first = d_min
        s_max = (cxs[0] - ox) * dx + (cys[0] - oy) * dy
        for cx, cy in zip(cxs[1:], cys[1:]):
            d = (cx - ox) * px + (cy - oy) * py
            if d < d_min:
                d_min = d
            elif d > d_max:
                d_max = d
            s = (cx - ox) * dx + (cy - oy) * dy
            if s > s_max:
                s_max = s
        d_last = (cxs[-1] - ox) * px + (cys[-1] - oy) * py
        if math.isnan(d_max - d_min):
            raise DegenerateGeometryError("non-finite geometry in ray/spline intersection")
        if d_min > INTERSECT_TOL or d_max < -INTERSECT_TOL:
            continue  # convex hull misses the ray line
        if s_max <= min_t:
            continue  # entirely behind the origin
        if d_max - d_min <= _LEAF_WIDTH or t_hi - t_lo <= 1e-13:
            leaf(t_lo, t_hi, d_first, d_last)
            continue
        if depth >= _MAX_SUBDIVISION_DEPTH:
            raise DegenerateGeometryError(
                "ray/spline subdivision exceeded depth 64 (degenerate control polygon)")
        lx, ly, rx, ry = _decasteljau_split(cxs, cys)
        t_mid = 0.5 * (t_lo + t_hi)
        stack.append((t_lo, t_mid, lx, ly, depth + 1))
        stack.append((t_mid, t_hi, rx, ry, depth + 1))

    if not candidates:
        return None
    s, tc = min(candidates)
    return Intersection(s, tc, curve.evaluate(tc))


def _intersect_segment(ray: Ray, seg: BSplineCurve, min_t: float) -> Optional[Intersection]:
    (ax, ay), (bx, by) = seg.control_points[0].as_tuple(), seg.control_points[1].as_tuple()
    ox, oy = ray.origin.x, ray.origin.y
    dx, dy = ray.direction.x, ray.direction.y
    ex, ey = bx - ax, by - ay
    denom = dx * ey - dy * ex
    if denom == 0.0:
        return None
    u = ((ax - ox) * ey - (ay - oy) * ex) / denom
    v = ((ax - ox) * dy - (ay - oy) * dx) / denom
    if u <= min_t or v < 0.0 or v > 1.0:
        return None
    lo, hi = seg.domain
    t_curve = lo + v * (hi - lo)
    return Intersection(u, t_curve, Point2(ox + u * dx, oy + u * dy))


def _decasteljau_split(cxs, cys):
    """Split a Bezier control polygon at parameter 0.5 (parallel x/y lists)."""
    n = len(cxs)
    lx, ly = [cxs[0]], [cys[0]]
    rx, ry = [cxs[-1]], [cys[-1]]
    wx, wy = list(cxs), list(cys)
    for level in range(1, n):
        m = n - level
        for i in range(m):
            wx[i] = (wx[i] + wx[i + 1]) * 0.5
            wy[i] = (wy[i] + wy[i + 1]) * 0.5
        lx.append(wx[0])
        ly.append(wy[0])
        rx.append(wx[m - 1])
        ry.append(wy[m - 1])
    rx.reverse()
    ry.reverse()
    return lx, ly, rx, ry


def _refine_root(curve, t0, ox, oy, px, py, bracket) -> Optional[float]:
    """Polish a perpendicular-distance root with Newton, bisection fallback."""
    lo, hi = curve.domain

    def f(t: float) -> float:
        qx, qy = curve._evaluate_raw(t)
        return (qx - ox) * px + (qy - oy) * py

    t = min(max(t0, lo), hi)
    if bracket is not None:
        b_lo, b_hi, f_lo, f_hi = bracket
    else:
        b_lo = b_hi = None
    for _ in range(60):
        ft = f(t)
        if abs(ft) < INTERSECT_TOL:
            return t
        dxt, dyt = curve.derivative(t)
        fp = dxt * px + dyt * py
        if fp != 0.0:
            t_new = t - ft / fp
        else:
            t_new = math.nan
        if b_lo is not None:
            # Maintain the bracket for the bisection fallback.
            if (ft < 0.0) != (f_lo < 0.0):
                b_hi, f_hi = t, ft
            else:
                b_lo, f_lo = t, ft
            if not (b_lo <= t_new <= b_hi) or math.isnan(t_new):
                t_new = 0.5 * (b_lo + b_hi)
        else:
            if math.isnan(t_new) or not (lo <= t_new <= hi):
                return None
        if t_new == t:
            return t if abs(ft) < 1e-7 else None
        t = t_new
    return t if abs(f(t)) < 1e-7 else None
