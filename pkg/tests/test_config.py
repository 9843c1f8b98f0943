import json
import math

import pytest

from fingertrace import reference_scene_path
from fingertrace.config import (
    ConfigError,
    ConfigSyntaxError,
    config_with_design,
    emit_config,
    parse_config,
    parse_scene,
)
from fingertrace.designopt import design_vector_from_scene, scene_with_design
from fingertrace.scene import SkinHit, trace_all

SMALL_CONFIG = """
{
  "units": "mm",
  "camera": {"pinhole": [0.0, 0.0], "boresight": [0.0, 1.0],
             "fov_deg": 60.0, "pixel_count": 16},
  "gel": {"refractive_index": 1.41, "dome_center": [0.0, 0.0], "dome_radius": 2.0},
  "surfaces": [
    {"kind": "reflective", "name": "fold",
     "shape": {"type": "segment", "p0": [-6.0, 10.0], "p1": [6.0, 12.0]}},
    {"kind": "refractive", "n_front": 1.41, "n_back": 1.0,
     "shape": {"type": "arc", "center": [0.0, 30.0], "radius": 5.0,
               "start_angle_deg": 180.0, "span_deg": 180.0}}
  ],
  "skin": {"type": "bspline", "degree": 2,
           "control_points": [[-8.0, -5.0], [0.0, -6.0], [8.0, -5.0]], "knots": null},
  "envelope": {"length_mm": 40.0, "width_mm": 45.0}
}
"""


def reference_text() -> str:
    return reference_scene_path().read_text()


def test_reference_config_traces():
    scene = parse_scene(reference_text())
    traces = trace_all(scene)
    hits = sum(1 for t in traces if isinstance(t.terminal, SkinHit))
    assert hits / len(traces) >= 0.95


def test_reference_config_is_canonical():
    text = reference_text()
    assert emit_config(parse_config(text)) == text


def test_emit_parse_roundtrip_small():
    cfg = parse_config(SMALL_CONFIG)
    canonical = emit_config(cfg)
    assert emit_config(parse_config(canonical)) == canonical
    scene = cfg.build()
    assert len(scene.surfaces) == 3  # dome + fold + arc interface
    assert scene.camera.pixel_count == 16


def test_fov_out_of_range_names_field():
    bad = SMALL_CONFIG.replace('"fov_deg": 60.0', '"fov_deg": 200.0')
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert err.value.path == "camera.fov_deg"


def test_unknown_key_rejected():
    obj = json.loads(SMALL_CONFIG)
    obj["camera"]["fov"] = 90.0
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(obj))
    assert "unknown key" in str(err.value)
    assert err.value.path == "camera.fov"


def test_unknown_nested_key_rejected():
    obj = json.loads(SMALL_CONFIG)
    obj["surfaces"][0]["shape"]["degre"] = 3
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(obj))
    assert err.value.path == "surfaces[0].shape.degre"


def test_syntax_error_reports_position():
    with pytest.raises(ConfigSyntaxError) as err:
        parse_config('{"units": "mm",,}')
    assert "line 1" in str(err.value)


def test_defaults_applied():
    obj = json.loads(SMALL_CONFIG)
    del obj["camera"]["fov_deg"]
    del obj["camera"]["pixel_count"]
    del obj["envelope"]
    cfg = parse_config(json.dumps(obj))
    assert cfg.fov_deg == 120.0
    assert cfg.pixel_count == 1080
    assert cfg.envelope_length == 83.5
    assert cfg.envelope_width == 22.7


def test_arc_skin_rejected():
    obj = json.loads(SMALL_CONFIG)
    obj["skin"] = {"type": "arc", "center": [0, 0], "radius": 5.0,
                   "start_angle_deg": 0.0, "span_deg": 90.0}
    with pytest.raises(ConfigError):
        parse_config(json.dumps(obj))


def test_zero_boresight_rejected():
    obj = json.loads(SMALL_CONFIG)
    obj["camera"]["boresight"] = [0.0, 0.0]
    with pytest.raises(ConfigError) as err:
        parse_config(json.dumps(obj))
    assert err.value.path == "camera.boresight"


def test_refractive_surface_requires_indices():
    obj = json.loads(SMALL_CONFIG)
    del obj["surfaces"][1]["n_front"]
    with pytest.raises(ConfigError):
        parse_config(json.dumps(obj))


def test_config_with_design_roundtrip():
    cfg = parse_config(reference_text())
    scene = cfg.build()
    dv = design_vector_from_scene(scene)
    moved = dv.with_free_values(dv.free_values() + 0.25)
    new_scene = scene_with_design(scene, moved)
    new_cfg = config_with_design(cfg, new_scene)
    rebuilt = new_cfg.build()
    assert rebuilt.skin.control_points == new_scene.skin.control_points
    # The canonical text parses back to the same design.
    again = parse_config(emit_config(new_cfg)).build()
    assert again.skin.control_points == new_scene.skin.control_points
