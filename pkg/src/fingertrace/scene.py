"""Sensor world assembly and pixel-ray tracing.

A scene is a pinhole camera inside an air pocket, a set of optical
surfaces (refractive air-gel interface, mirrors) and a terminal
absorbing sensing skin.  Rays leave the camera in air, refract into the
gel at the interface, fold across the mirrors and stop at the skin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

from .geometry import (
    TIR,
    BSplineCurve,
    CircularArc,
    Dir2,
    GeometryDomainError,
    Intersection,
    Point2,
    Ray,
    intersect,
    reflect,
    refract,
)

__all__ = [
    "Camera",
    "Reflective",
    "Refractive",
    "Absorbing",
    "OpticalSurface",
    "SensorScene",
    "SkinHit",
    "Terminal",
    "TraceResult",
    "trace_pixel",
    "trace_all",
    "trace_ray",
    "effective_fov",
    "interface_probe_scene",
]

MAX_BOUNCES = 16
# Hits closer than this are treated as the launch surface itself.
TRACE_EPS = 1e-7


@dataclass(frozen=True, slots=True)
class Camera:
    """Pinhole camera fanning pixel rays uniformly in angle across the FOV."""

    pinhole: Point2
    boresight: Dir2
    fov_deg: float
    pixel_count: int

    def __post_init__(self):
        if not (0.0 < self.fov_deg < 180.0):
            raise GeometryDomainError(f"fov_deg must be in (0, 180), got {self.fov_deg}")
        if self.pixel_count < 2:
            raise GeometryDomainError(f"pixel_count must be >= 2, got {self.pixel_count}")

    def pixel_direction(self, pixel_index: int) -> Dir2:
        if not (0 <= pixel_index < self.pixel_count):
            raise GeometryDomainError(
                f"pixel index {pixel_index} outside [0, {self.pixel_count})")
        half = math.radians(self.fov_deg) / 2.0
        frac = pixel_index / (self.pixel_count - 1)
        return Dir2.from_angle(self.boresight.angle() - half + 2.0 * half * frac)


class Reflective:
    """Mirror surface."""


@dataclass(frozen=True, slots=True)
class Refractive:
    """Refractive boundary.

    n_front is the medium on the side the surface normal points into
    (+90-degree rotation of the tangent for splines, outward radial for
    arcs); n_back is the other side.
    """

    n_front: float
    n_back: float

    def __post_init__(self):
        if self.n_front < 1.0 or self.n_back < 1.0:
            raise GeometryDomainError("refractive indices must be >= 1")


class Absorbing:
    """Light stops here (non-skin absorbers, e.g. housing walls)."""


SurfaceKind = Union[Reflective, Refractive, Absorbing]


@dataclass(frozen=True, slots=True)
class OpticalSurface:
    geometry: Union[BSplineCurve, CircularArc]
    kind: SurfaceKind
    name: str = ""


@dataclass(frozen=True, slots=True)
class SkinHit:
    """Terminal: ray reached the sensing skin."""

    t_skin: float              # skin curve parameter
    incidence_angle: float     # radians from the skin tangent, in (0, pi/2]


class Terminal(Enum):
    ESCAPED = "escaped"
    ABSORBED = "absorbed"
    TIR = "tir"
    MAX_BOUNCES = "max_bounces"


@dataclass(frozen=True, slots=True)
class PathNode:
    point: Point2
    direction: Dir2      # direction leaving this point (incoming one at the terminal)
    medium_index: float


@dataclass(frozen=True, slots=True)
class TraceResult:
    pixel_index: int
    path: tuple[PathNode, ...]
    terminal: Union[SkinHit, Terminal]

    @property
    def is_skin_hit(self) -> bool:
        return isinstance(self.terminal, SkinHit)


class SensorScene:
    """Immutable world: camera, ordered surface list, terminal skin, envelope."""

    __slots__ = ("camera", "surfaces", "skin", "envelope")

    def __init__(self, camera: Camera, surfaces: Sequence[OpticalSurface],
                 skin: BSplineCurve, envelope: tuple[float, float]):
        length, width = envelope
        if length <= 0 or width <= 0:
            raise GeometryDomainError("envelope length/width must be positive")
        self.camera = camera
        self.surfaces = tuple(surfaces)
        self.skin = skin
        self.envelope = (float(length), float(width))


def trace_ray(scene: SensorScene, ray: Ray, pixel_index: int = -1) -> TraceResult:
    """Propagate one ray through the scene until it terminates."""
    pos = ray.origin
    d = ray.direction
    medium = ray.medium_index
    path = [PathNode(pos, d, medium)]
    saw_tir = False

    for _ in range(MAX_BOUNCES):
        nearest: Optional[Intersection] = None
        nearest_surface: Optional[OpticalSurface] = None
        hit_skin = False
        for surf in scene.surfaces:
            hit = intersect(Ray(pos, d, medium), surf.geometry, min_t=TRACE_EPS)
            if hit is not None and (nearest is None or hit.t_ray < nearest.t_ray):
                nearest, nearest_surface, hit_skin = hit, surf, False
        skin_hit = intersect(Ray(pos, d, medium), scene.skin, min_t=TRACE_EPS)
        if skin_hit is not None and (nearest is None or skin_hit.t_ray < nearest.t_ray):
            nearest, nearest_surface, hit_skin = skin_hit, None, True

        if nearest is None:
            return TraceResult(pixel_index, tuple(path), Terminal.ESCAPED)

        pos = nearest.point
        if hit_skin:
            tangent, _ = scene.skin.tangent_normal(nearest.t_surface)
            angle = math.acos(min(1.0, abs(d.dot(tangent))))
            path.append(PathNode(pos, d, medium))
            return TraceResult(pixel_index, tuple(path), SkinHit(nearest.t_surface, angle))

        geom = nearest_surface.geometry
        if isinstance(geom, CircularArc):
            normal = geom.normal_at(nearest.t_surface)
        else:
            _, normal = geom.tangent_normal(nearest.t_surface)

        kind = nearest_surface.kind
        if isinstance(kind, Refractive):
            going_back_to_front = d.dot(normal) > 0.0
            n_from = kind.n_back if going_back_to_front else kind.n_front
            n_to = kind.n_front if going_back_to_front else kind.n_back
            out = refract(d, normal, n_from, n_to)
            if out is TIR:
                d = reflect(d, normal)
                saw_tir = True
            else:
                d = out
                medium = n_to
        elif isinstance(kind, Reflective) or kind is Reflective:
            d = reflect(d, normal)
        else:  # absorbing, not the skin
            path.append(PathNode(pos, d, medium))
            return TraceResult(pixel_index, tuple(path), Terminal.ABSORBED)
        path.append(PathNode(pos, d, medium))

    return TraceResult(pixel_index, tuple(path),
                       Terminal.TIR if saw_tir else Terminal.MAX_BOUNCES)


def trace_pixel(scene: SensorScene, pixel_index: int) -> TraceResult:
    """Trace the fan ray of one camera pixel."""
    d = scene.camera.pixel_direction(pixel_index)
    ray = Ray(scene.camera.pinhole, d, 1.0)
    return trace_ray(scene, ray, pixel_index)


def trace_all(scene: SensorScene) -> list[TraceResult]:
    """Trace every pixel, results in pixel order."""
    return [trace_pixel(scene, i) for i in range(scene.camera.pixel_count)]


# ---------------------------------------------------------------------------
# Field-of-view probe (flat vs dome air-gel interface)
# ---------------------------------------------------------------------------

def effective_fov(scene: SensorScene) -> float:
    """Angular width, in the gel, between the outermost refracted pixel rays.

    The scene must contain exactly one refractive surface; mirrors and the
    skin are ignored.  Raises when every ray is lost to TIR.

    Note: for a flat interface this ideal pencil-ray Snell model gives
    2*asin(sin(fov/2)/n) (75.8 degrees at n=1.41 for a 120-degree fan);
    real wide-angle lens assemblies measure wider (around 90 degrees).
    That gap is a property of physical lenses, not a target this model
    is tuned toward.
    """
    interfaces = [s for s in scene.surfaces if isinstance(s.kind, Refractive)]
    if len(interfaces) != 1:
        raise GeometryDomainError(
            f"effective_fov needs exactly one refractive surface, found {len(interfaces)}")
    surf = interfaces[0]
    angles = []
    for i in range(scene.camera.pixel_count):
        d = scene.camera.pixel_direction(i)
        hit = intersect(Ray(scene.camera.pinhole, d), surf.geometry, min_t=TRACE_EPS)
        if hit is None:
            continue
        geom = surf.geometry
        if isinstance(geom, CircularArc):
            normal = geom.normal_at(hit.t_surface)
        else:
            _, normal = geom.tangent_normal(hit.t_surface)
        going_back_to_front = d.dot(normal) > 0.0
        n_from = surf.kind.n_back if going_back_to_front else surf.kind.n_front
        n_to = surf.kind.n_front if going_back_to_front else surf.kind.n_back
        out = refract(d, normal, n_from, n_to)
        if out is TIR:
            continue
        angles.append(out.angle())
    if not angles:
        raise GeometryDomainError("no ray crossed the interface (all TIR or missed)")
    # Unwrap around the boresight so the width is well-defined.
    base = scene.camera.boresight.angle()
    rel = [(a - base + math.pi) % (2.0 * math.pi) - math.pi for a in angles]
    return math.degrees(max(rel) - min(rel))


def interface_probe_scene(interface: str, n_gel: float = 1.41, fov_deg: float = 120.0,
                          pixel_count: int = 181, dome_radius: float = 3.5,
                          standoff: float = 2.0) -> SensorScene:
    """Minimal camera-plus-interface scene for FOV experiments.

    interface: "flat" for a perpendicular plane at `standoff` mm, "dome"
    for a hemisphere of `dome_radius` concentric with the pinhole.  A far
    absorbing skin closes the scene.
    """
    pinhole = Point2(0.0, 0.0)
    camera = Camera(pinhole, Dir2(0.0, 1.0), fov_deg, pixel_count)
    if interface == "flat":
        half_width = standoff * math.tan(math.radians(fov_deg) / 2.0) * 1.5 + 1.0
        geom = BSplineCurve.line((-half_width, standoff), (half_width, standoff))
    elif interface == "dome":
        geom = CircularArc(pinhole, dome_radius, 0.0, math.pi)
    else:
        raise GeometryDomainError(f"unknown interface kind {interface!r}")
    # Normal points up / outward, i.e. into the gel.
    surface = OpticalSurface(geom, Refractive(n_front=n_gel, n_back=1.0), "interface")
    skin = BSplineCurve.line((-500.0, 400.0), (500.0, 400.0))
    return SensorScene(camera, [surface], skin, envelope=(1000.0, 500.0))
