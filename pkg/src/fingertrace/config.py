"""Scene configuration: strict JSON dialect with canonical emission.

Unknown keys are rejected everywhere (silent typos in geometry configs
are the classic failure mode of design tools).  Parsing fills documented
defaults, so emit(parse(text)) is the canonical byte-stable form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .geometry import (
    BSplineCurve,
    CircularArc,
    Dir2,
    GeometryDomainError,
    Point2,
)
from .scene import (
    Absorbing,
    Camera,
    OpticalSurface,
    Reflective,
    Refractive,
    SensorScene,
)

__all__ = ["ConfigError", "ConfigSyntaxError", "SceneConfig", "parse_config",
           "parse_scene", "emit_config", "config_from_file", "config_with_design"]

# Shipped defaults: 120 deg wide-angle camera at 1080 in-plane pixels,
# silicone gel index 1.41, 3.5 mm interface dome (half of a 7 mm ball),
# 83.5 x 22.7 mm finger footprint.
DEFAULT_FOV_DEG = 120.0
DEFAULT_PIXEL_COUNT = 1080
DEFAULT_GEL_INDEX = 1.41
DEFAULT_DOME_RADIUS = 3.5
DEFAULT_ENVELOPE_LENGTH = 83.5
DEFAULT_ENVELOPE_WIDTH = 22.7


class ConfigError(ValueError):
    """Invalid scene config; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ConfigSyntaxError(ConfigError):
    """Config text is not even well-formed JSON."""


def _require_keys(obj: dict, path: str, allowed: set[str], required: set[str]):
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}" if path else sorted(unknown)[0],
                          "unknown key")
    missing = required - set(obj)
    if missing:
        raise ConfigError(path, f"missing required key {sorted(missing)[0]!r}")


def _number(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(v).__name__}")
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return float(v)


def _point(v: Any, path: str) -> tuple[float, float]:
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(path, "expected [x, y]")
    return (_number(v[0], f"{path}[0]"), _number(v[1], f"{path}[1]"))


def _obj(v: Any, path: str) -> dict:
    if not isinstance(v, dict):
        raise ConfigError(path, f"expected an object, got {type(v).__name__}")
    return v


@dataclass(frozen=True)
class ShapeSpec:
    """Geometry spec: bspline, straight segment, or circular arc."""

    type: str
    degree: Optional[int] = None
    control_points: Optional[tuple[tuple[float, float], ...]] = None
    knots: Optional[tuple[float, ...]] = None
    p0: Optional[tuple[float, float]] = None
    p1: Optional[tuple[float, float]] = None
    center: Optional[tuple[float, float]] = None
    radius: Optional[float] = None
    start_angle_deg: Optional[float] = None
    span_deg: Optional[float] = None

    def build(self, path: str):
        try:
            if self.type == "bspline":
                return BSplineCurve(self.degree, self.control_points, self.knots)
            if self.type == "segment":
                return BSplineCurve.line(self.p0, self.p1)
            return CircularArc(self.center, self.radius,
                               math.radians(self.start_angle_deg),
                               math.radians(self.span_deg))
        except GeometryDomainError as e:
            raise ConfigError(path, str(e)) from e

    def to_json(self) -> dict:
        if self.type == "bspline":
            return {"type": "bspline", "degree": self.degree,
                    "control_points": [list(p) for p in self.control_points],
                    "knots": list(self.knots) if self.knots is not None else None}
        if self.type == "segment":
            return {"type": "segment", "p0": list(self.p0), "p1": list(self.p1)}
        return {"type": "arc", "center": list(self.center), "radius": self.radius,
                "start_angle_deg": self.start_angle_deg, "span_deg": self.span_deg}


def _parse_shape(v: Any, path: str) -> ShapeSpec:
    obj = _obj(v, path)
    kind = obj.get("type")
    if kind == "bspline":
        _require_keys(obj, path, {"type", "degree", "control_points", "knots"},
                      {"type", "degree", "control_points"})
        degree = obj["degree"]
        if not isinstance(degree, int) or isinstance(degree, bool) or degree < 1:
            raise ConfigError(f"{path}.degree", "must be an integer >= 1")
        cps = obj["control_points"]
        if not isinstance(cps, list) or len(cps) < 2:
            raise ConfigError(f"{path}.control_points", "expected a list of [x, y]")
        pts = tuple(_point(p, f"{path}.control_points[{i}]") for i, p in enumerate(cps))
        knots = obj.get("knots")
        kt = None
        if knots is not None:
            if not isinstance(knots, list):
                raise ConfigError(f"{path}.knots", "expected a list or null")
            kt = tuple(_number(k, f"{path}.knots[{i}]") for i, k in enumerate(knots))
        return ShapeSpec("bspline", degree=degree, control_points=pts, knots=kt)
    if kind == "segment":
        _require_keys(obj, path, {"type", "p0", "p1"}, {"type", "p0", "p1"})
        return ShapeSpec("segment", p0=_point(obj["p0"], f"{path}.p0"),
                         p1=_point(obj["p1"], f"{path}.p1"))
    if kind == "arc":
        _require_keys(obj, path, {"type", "center", "radius", "start_angle_deg", "span_deg"},
                      {"type", "center", "radius", "start_angle_deg", "span_deg"})
        radius = _number(obj["radius"], f"{path}.radius")
        if radius <= 0:
            raise ConfigError(f"{path}.radius", "must be positive")
        span = _number(obj["span_deg"], f"{path}.span_deg")
        if not (0.0 < span <= 360.0):
            raise ConfigError(f"{path}.span_deg", "must be in (0, 360]")
        return ShapeSpec("arc", center=_point(obj["center"], f"{path}.center"),
                         radius=radius,
                         start_angle_deg=_number(obj["start_angle_deg"],
                                                 f"{path}.start_angle_deg"),
                         span_deg=span)
    raise ConfigError(f"{path}.type", "must be one of 'bspline', 'segment', 'arc'")


@dataclass(frozen=True)
class SurfaceSpec:
    kind: str                       # reflective | refractive | absorbing
    shape: ShapeSpec
    name: str = ""
    n_front: Optional[float] = None
    n_back: Optional[float] = None

    def build(self, path: str) -> OpticalSurface:
        if self.kind == "reflective":
            k = Reflective()
        elif self.kind == "absorbing":
            k = Absorbing()
        else:
            k = Refractive(self.n_front, self.n_back)
        return OpticalSurface(self.shape.build(f"{path}.shape"), k, self.name)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "name": self.name, "shape": self.shape.to_json()}
        if self.kind == "refractive":
            out["n_front"] = self.n_front
            out["n_back"] = self.n_back
        return out


def _parse_surface(v: Any, path: str) -> SurfaceSpec:
    obj = _obj(v, path)
    kind = obj.get("kind")
    if kind not in ("reflective", "refractive", "absorbing"):
        raise ConfigError(f"{path}.kind",
                          "must be one of 'reflective', 'refractive', 'absorbing'")
    allowed = {"kind", "name", "shape"}
    required = {"kind", "shape"}
    if kind == "refractive":
        allowed |= {"n_front", "n_back"}
        required |= {"n_front", "n_back"}
    _require_keys(obj, path, allowed, required)
    name = obj.get("name", "")
    if not isinstance(name, str):
        raise ConfigError(f"{path}.name", "must be a string")
    n_front = n_back = None
    if kind == "refractive":
        n_front = _number(obj["n_front"], f"{path}.n_front")
        n_back = _number(obj["n_back"], f"{path}.n_back")
        for label, val in (("n_front", n_front), ("n_back", n_back)):
            if val < 1.0:
                raise ConfigError(f"{path}.{label}", "refractive index must be >= 1")
    return SurfaceSpec(kind, _parse_shape(obj["shape"], f"{path}.shape"), name,
                       n_front, n_back)


@dataclass(frozen=True)
class SceneConfig:
    """Validated scene description; build() assembles the SensorScene."""

    pinhole: tuple[float, float]
    boresight: tuple[float, float]
    fov_deg: float
    pixel_count: int
    gel_index: float
    dome_center: Optional[tuple[float, float]]
    dome_radius: Optional[float]
    surfaces: tuple[SurfaceSpec, ...]
    skin: ShapeSpec
    envelope_length: float
    envelope_width: float

    def build(self) -> SensorScene:
        try:
            camera = Camera(Point2(*self.pinhole), Dir2.from_xy(*self.boresight),
                            self.fov_deg, self.pixel_count)
        except GeometryDomainError as e:
            raise ConfigError("camera", str(e)) from e
        surfaces = []
        if self.dome_radius is not None:
            bore = math.atan2(self.boresight[1], self.boresight[0])
            dome = CircularArc(Point2(*self.dome_center), self.dome_radius,
                               bore - math.pi / 2.0, math.pi)
            surfaces.append(OpticalSurface(dome, Refractive(self.gel_index, 1.0),
                                           "air_gel_dome"))
        for i, spec in enumerate(self.surfaces):
            surfaces.append(spec.build(f"surfaces[{i}]"))
        skin = self.skin.build("skin")
        if not isinstance(skin, BSplineCurve):
            raise ConfigError("skin", "skin must be a bspline or segment")
        return SensorScene(camera, surfaces, skin,
                           (self.envelope_length, self.envelope_width))

    def to_json(self) -> dict:
        return {
            "units": "mm",
            "camera": {
                "pinhole": list(self.pinhole),
                "boresight": list(self.boresight),
                "fov_deg": self.fov_deg,
                "pixel_count": self.pixel_count,
            },
            "gel": {
                "refractive_index": self.gel_index,
                "dome_center": list(self.dome_center) if self.dome_center else None,
                "dome_radius": self.dome_radius,
            },
            "surfaces": [s.to_json() for s in self.surfaces],
            "skin": self.skin.to_json(),
            "envelope": {
                "length_mm": self.envelope_length,
                "width_mm": self.envelope_width,
            },
        }


def parse_config(text: str) -> SceneConfig:
    """Parse and validate config text; raises ConfigError with a location."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigSyntaxError(
            "", f"syntax error at line {e.lineno}, column {e.colno}: {e.msg}") from e
    root = _obj(raw, "")
    _require_keys(root, "", {"units", "camera", "gel", "surfaces", "skin", "envelope"},
                  {"units", "camera", "skin"})
    if root["units"] != "mm":
        raise ConfigError("units", "only 'mm' is supported")

    cam = _obj(root["camera"], "camera")
    _require_keys(cam, "camera", {"pinhole", "boresight", "fov_deg", "pixel_count"},
                  {"pinhole", "boresight"})
    pinhole = _point(cam["pinhole"], "camera.pinhole")
    boresight = _point(cam["boresight"], "camera.boresight")
    if math.hypot(*boresight) < 1e-12:
        raise ConfigError("camera.boresight", "must be a nonzero direction")
    fov = _number(cam.get("fov_deg", DEFAULT_FOV_DEG), "camera.fov_deg")
    if not (0.0 < fov < 180.0):
        raise ConfigError("camera.fov_deg", f"must be in (0, 180), got {fov}")
    pixel_count = cam.get("pixel_count", DEFAULT_PIXEL_COUNT)
    if not isinstance(pixel_count, int) or isinstance(pixel_count, bool) or pixel_count < 2:
        raise ConfigError("camera.pixel_count", "must be an integer >= 2")

    gel_index = DEFAULT_GEL_INDEX
    dome_center: Optional[tuple[float, float]] = None
    dome_radius: Optional[float] = None
    if "gel" in root:
        gel = _obj(root["gel"], "gel")
        _require_keys(gel, "gel", {"refractive_index", "dome_center", "dome_radius"}, set())
        gel_index = _number(gel.get("refractive_index", DEFAULT_GEL_INDEX),
                            "gel.refractive_index")
        if gel_index < 1.0:
            raise ConfigError("gel.refractive_index", "must be >= 1")
        if gel.get("dome_center") is not None or gel.get("dome_radius") is not None:
            if gel.get("dome_center") is None:
                raise ConfigError("gel.dome_center", "required when dome_radius is set")
            dome_center = _point(gel["dome_center"], "gel.dome_center")
            dome_radius = _number(gel.get("dome_radius", DEFAULT_DOME_RADIUS),
                                  "gel.dome_radius")
            if dome_radius <= 0:
                raise ConfigError("gel.dome_radius", "must be positive")

    surfaces = []
    if "surfaces" in root:
        if not isinstance(root["surfaces"], list):
            raise ConfigError("surfaces", "expected a list")
        surfaces = [_parse_surface(s, f"surfaces[{i}]")
                    for i, s in enumerate(root["surfaces"])]

    skin = _parse_shape(root["skin"], "skin")
    if skin.type == "arc":
        raise ConfigError("skin.type", "skin must be a bspline or segment")

    env_len, env_wid = DEFAULT_ENVELOPE_LENGTH, DEFAULT_ENVELOPE_WIDTH
    if "envelope" in root:
        env = _obj(root["envelope"], "envelope")
        _require_keys(env, "envelope", {"length_mm", "width_mm"}, set())
        env_len = _number(env.get("length_mm", DEFAULT_ENVELOPE_LENGTH), "envelope.length_mm")
        env_wid = _number(env.get("width_mm", DEFAULT_ENVELOPE_WIDTH), "envelope.width_mm")
        if env_len <= 0 or env_wid <= 0:
            raise ConfigError("envelope", "length_mm and width_mm must be positive")

    cfg = SceneConfig(pinhole, boresight, fov, pixel_count, gel_index,
                      dome_center, dome_radius, tuple(surfaces), skin,
                      env_len, env_wid)
    cfg.build()  # surface any deeper invariant violation now
    return cfg


def parse_scene(text: str) -> SensorScene:
    """Config text straight to a traced-ready scene."""
    return parse_config(text).build()


def emit_config(cfg: SceneConfig) -> str:
    """Canonical config text: sorted keys, two-space indent, newline-terminated."""
    return json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n"


def config_from_file(path) -> SceneConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_with_design(cfg: SceneConfig, designed: SensorScene) -> SceneConfig:
    """Copy the designed scene's spline control points back into the config.

    The designed scene must have been built from this config (same surface
    list, same dome).
    """
    offset = 1 if cfg.dome_radius is not None else 0
    new_surfaces = []
    for i, spec in enumerate(cfg.surfaces):
        geom = designed.surfaces[i + offset].geometry
        if spec.shape.type == "bspline" and isinstance(geom, BSplineCurve):
            shape = ShapeSpec("bspline", degree=geom.degree,
                              control_points=tuple(p.as_tuple() for p in geom.control_points),
                              knots=spec.shape.knots)
            new_surfaces.append(SurfaceSpec(spec.kind, shape, spec.name,
                                            spec.n_front, spec.n_back))
        else:
            new_surfaces.append(spec)
    skin = cfg.skin
    if skin.type == "bspline":
        skin = ShapeSpec("bspline", degree=designed.skin.degree,
                         control_points=tuple(p.as_tuple() for p in designed.skin.control_points),
                         knots=cfg.skin.knots)
    return SceneConfig(cfg.pinhole, cfg.boresight, cfg.fov_deg, cfg.pixel_count,
                       cfg.gel_index, cfg.dome_center, cfg.dome_radius,
                       tuple(new_surfaces), skin, cfg.envelope_length, cfg.envelope_width)
