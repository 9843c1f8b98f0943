import math

import pytest

from fingertrace.geometry import BSplineCurve, CircularArc, Dir2, GeometryDomainError, Point2
from fingertrace.scene import (
    Absorbing,
    Camera,
    OpticalSurface,
    Reflective,
    Refractive,
    SensorScene,
    SkinHit,
    Terminal,
    effective_fov,
    interface_probe_scene,
    trace_all,
    trace_pixel,
)

from oracles import snell_angle


def head_on_scene(pixel_count=3):
    cam = Camera(Point2(0, 0), Dir2(0, 1), fov_deg=20.0, pixel_count=pixel_count)
    skin = BSplineCurve.line((-30, 10), (30, 10))
    return SensorScene(cam, [], skin, envelope=(60, 20))


def test_head_on_flat_skin():
    scene = head_on_scene()
    result = trace_pixel(scene, 1)  # middle pixel: straight up
    assert isinstance(result.terminal, SkinHit)
    assert math.degrees(result.terminal.incidence_angle) == pytest.approx(90.0, abs=1e-9)
    assert len(result.path) == 2
    assert result.path[-1].point.y == pytest.approx(10.0, abs=1e-9)


def test_single_fold_mirror_path():
    cam = Camera(Point2(0, 0), Dir2(1, 0), fov_deg=10.0, pixel_count=3)
    mirror = OpticalSurface(BSplineCurve.line((6, -1), (4, 1)), Reflective(), "fold")
    skin = BSplineCurve.line((3, -3), (7, -3))
    scene = SensorScene(cam, [mirror], skin, envelope=(20, 20))
    result = trace_pixel(scene, 1)
    assert isinstance(result.terminal, SkinHit)
    assert len(result.path) == 3
    fold = result.path[1].point
    assert (fold.x, fold.y) == pytest.approx((5.0, 0.0), abs=1e-9)
    end = result.path[2].point
    assert (end.x, end.y) == pytest.approx((5.0, -3.0), abs=1e-9)
    assert math.degrees(result.terminal.incidence_angle) == pytest.approx(90.0, abs=1e-9)


def test_trace_all_matches_per_pixel_and_is_deterministic():
    scene = head_on_scene(pixel_count=7)
    results = trace_all(scene)
    assert [r.pixel_index for r in results] == list(range(7))
    for i, r in enumerate(results):
        single = trace_pixel(scene, i)
        assert single == r
    assert trace_all(scene) == results


def test_invalid_pixel_index():
    scene = head_on_scene()
    with pytest.raises(GeometryDomainError):
        trace_pixel(scene, 99)


def test_path_segments_follow_recorded_directions():
    scene = interface_probe_scene("flat")
    for r in trace_all(scene):
        for a, b in zip(r.path[:-1], r.path[1:]):
            dx, dy = b.point.x - a.point.x, b.point.y - a.point.y
            n = math.hypot(dx, dy)
            assert abs(dx / n - a.direction.x) < 1e-9
            assert abs(dy / n - a.direction.y) < 1e-9


def test_medium_changes_only_at_refraction():
    scene = interface_probe_scene("dome")
    mirror = OpticalSurface(BSplineCurve.line((-80, 30), (80, 30)), Reflective(), "m")
    scene = SensorScene(scene.camera, list(scene.surfaces) + [mirror],
                        BSplineCurve.line((-500, -400), (500, -400)), (1000, 900))
    r = trace_pixel(scene, scene.camera.pixel_count // 2)
    media = [n.medium_index for n in r.path]
    # pinhole -> dome (into gel) -> mirror (unchanged) -> dome (back to air) -> skin
    assert isinstance(r.terminal, SkinHit)
    assert media == pytest.approx([1.0, 1.41, 1.41, 1.0, 1.0])


def test_tir_reflects_and_continues():
    cam = Camera(Point2(0, 0), Dir2(0, 1), fov_deg=10.0, pixel_count=3)
    entry = OpticalSurface(BSplineCurve.line((-10, 1), (10, 1)),
                           Refractive(n_front=1.41, n_back=1.0), "entry")
    a = math.radians(50)
    tdir = (-math.cos(a), math.sin(a))
    steep = OpticalSurface(
        BSplineCurve.line((0 - 4 * tdir[0], 3 - 4 * tdir[1]),
                          (0 + 4 * tdir[0], 3 + 4 * tdir[1])),
        Refractive(n_front=1.41, n_back=1.0), "steep")
    skin = BSplineCurve.line((-100, -50), (100, -50))
    scene = SensorScene(cam, [entry, steep], skin, envelope=(200, 110))
    r = trace_pixel(scene, 1)  # straight up, normal through entry, 50 deg at steep
    media = [n.medium_index for n in r.path]
    assert media[1] == pytest.approx(1.41)
    # TIR at the steep interface: still in gel afterwards, direction mirrored.
    assert media[2] == pytest.approx(1.41)
    assert r.path[2].direction.y < 0 or abs(r.path[2].direction.x) > 0.5


def test_effective_fov_flat_vs_dome():
    flat = interface_probe_scene("flat", n_gel=1.41, fov_deg=120.0)
    dome = interface_probe_scene("dome", n_gel=1.41, fov_deg=120.0)
    expected_flat = 2.0 * math.degrees(snell_angle(math.radians(60), 1.0, 1.41))
    assert effective_fov(flat) == pytest.approx(expected_flat, abs=1e-6)
    assert effective_fov(dome) == pytest.approx(120.0, abs=1e-9)
    assert effective_fov(dome) > effective_fov(flat)


def test_effective_fov_no_refraction_for_unit_index():
    flat = interface_probe_scene("flat", n_gel=1.0)
    assert effective_fov(flat) == pytest.approx(120.0, abs=1e-9)


def test_dome_at_least_flat_for_any_index():
    for n in (1.1, 1.41, 1.8, 2.4):
        flat = interface_probe_scene("flat", n_gel=n)
        dome = interface_probe_scene("dome", n_gel=n)
        assert effective_fov(dome) > effective_fov(flat)


def test_effective_fov_requires_single_interface():
    scene = head_on_scene()
    with pytest.raises(GeometryDomainError):
        effective_fov(scene)


def test_camera_validation():
    with pytest.raises(GeometryDomainError):
        Camera(Point2(0, 0), Dir2(0, 1), fov_deg=200.0, pixel_count=10)
    with pytest.raises(GeometryDomainError):
        Camera(Point2(0, 0), Dir2(0, 1), fov_deg=90.0, pixel_count=1)


def test_escape_terminal():
    cam = Camera(Point2(0, 0), Dir2(0, -1), fov_deg=20.0, pixel_count=2)
    skin = BSplineCurve.line((-5, 10), (5, 10))
    scene = SensorScene(cam, [], skin, envelope=(10, 20))
    r = trace_pixel(scene, 0)
    assert r.terminal is Terminal.ESCAPED
    assert len(r.path) == 1


def test_absorbing_surface_terminal():
    cam = Camera(Point2(0, 0), Dir2(0, 1), fov_deg=20.0, pixel_count=3)
    wall = OpticalSurface(BSplineCurve.line((-5, 5), (5, 5)), Absorbing(), "wall")
    skin = BSplineCurve.line((-5, 10), (5, 10))
    scene = SensorScene(cam, [wall], skin, envelope=(10, 20))
    r = trace_pixel(scene, 1)
    assert r.terminal is Terminal.ABSORBED


def test_effective_fov_errors_when_no_ray_crosses():
    cam = Camera(Point2(0, 0), Dir2(0, 1), fov_deg=120.0, pixel_count=11)
    # Interface far off to the side: every fan ray misses it.
    tiny = OpticalSurface(BSplineCurve.line((100, 2), (101, 2)),
                          Refractive(n_front=1.41, n_back=1.0), "offside")
    skin = BSplineCurve.line((-500, 400), (500, 400))
    scene = SensorScene(cam, [tiny], skin, envelope=(1000, 500))
    with pytest.raises(GeometryDomainError):
        effective_fov(scene)


def test_reference_path_points_lie_on_surfaces():
    import dataclasses

    import numpy as np

    from fingertrace import reference_scene_path
    from fingertrace.config import config_from_file
    cfg = dataclasses.replace(config_from_file(str(reference_scene_path())),
                              pixel_count=96)
    scene = cfg.build()
    clouds = []
    for geom in [s.geometry for s in scene.surfaces] + [scene.skin]:
        if isinstance(geom, CircularArc):
            angles = geom.start_angle + geom.span * np.linspace(0, 1, 20000)
            clouds.append(np.stack([geom.center.x + geom.radius * np.cos(angles),
                                    geom.center.y + geom.radius * np.sin(angles)], axis=1))
        else:
            clouds.append(geom.evaluate_many(np.linspace(*geom.domain, 40000)))
    cloud = np.concatenate(clouds)
    for tr in trace_all(scene):
        for node in tr.path[1:]:
            d = np.min(np.hypot(cloud[:, 0] - node.point.x, cloud[:, 1] - node.point.y))
            # resolution limited by the sample cloud spacing, not the tracer
            assert d < 3e-3, (tr.pixel_index, node.point)
