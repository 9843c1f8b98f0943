import math
from pathlib import Path

import numpy as np
import pytest

from fingertrace.imaging import read_ppm
from fingertrace.proprio import (
    BackboneModel,
    RigidTransform,
    TorqueRangeError,
    deflect_leds,
    frame_to_uint8,
    generate_dataset,
    load_dataset,
    render_synthetic_frame,
    sample_torques,
    station_positions,
    torques_from_wrench,
    transform_to_finger_frame,
)

from oracles import (
    calibrated_centroid_readback,
    cantilever_end_moment_deflection,
    intensity_centroid,
)

DATA = Path(__file__).parent / "data"


# -- torque ground truth -------------------------------------------------------

def test_wrench_examples():
    assert torques_from_wrench((50, 0, 0), (0, 0, -1)) == (50.0, 0.0)
    assert torques_from_wrench((50, 10, 0), (0, 0, -1)) == (50.0, -10.0)
    assert torques_from_wrench((0, 0, 0), (3, -2, 9)) == (0.0, 0.0)


def test_wrench_linearity_and_superposition():
    rng = np.random.default_rng(5)
    for _ in range(200):
        p = rng.uniform(-80, 80, 3)
        f1 = rng.uniform(-5, 5, 3)
        f2 = rng.uniform(-5, 5, 3)
        alpha = rng.uniform(-3, 3)
        b1, t1 = torques_from_wrench(p, f1)
        b2, t2 = torques_from_wrench(p, f2)
        bs, ts = torques_from_wrench(p, f1 + f2)
        assert bs == pytest.approx(b1 + b2, abs=1e-9)
        assert ts == pytest.approx(t1 + t2, abs=1e-9)
        ba, ta = torques_from_wrench(p, alpha * f1)
        assert ba == pytest.approx(alpha * b1, abs=1e-9)
        assert ta == pytest.approx(alpha * t1, abs=1e-9)


def rot_z(deg):
    a = math.radians(deg)
    return np.array([[math.cos(a), -math.sin(a), 0],
                     [math.sin(a), math.cos(a), 0],
                     [0, 0, 1]])


def test_identity_transforms_pass_through():
    ident = RigidTransform.identity()
    p, f = transform_to_finger_frame(ident, ident, (1, 2, 3), (4, 5, 6))
    assert np.allclose(p, (4, 5, 6))
    assert np.allclose(f, (1, 2, 3))


def test_rotated_finger_frame():
    probe = RigidTransform.identity()
    finger = RigidTransform(rot_z(90), np.zeros(3))
    _, f = transform_to_finger_frame(probe, finger, (1, 0, 0), (0, 0, 0))
    assert np.allclose(f, (0, -1, 0), atol=1e-12)


def test_rigid_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(50):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        r = np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])
        tf = RigidTransform(r, rng.uniform(-50, 50, 3))
        p = rng.uniform(-40, 40, 3)
        back = tf.inverse().apply_point(tf.apply_point(p))
        assert np.max(np.abs(back - p)) < 1e-10
        v = rng.uniform(-5, 5, 3)
        backv = tf.inverse().apply_vector(tf.apply_vector(v))
        assert np.max(np.abs(backv - v)) < 1e-10


def test_non_rigid_transform_rejected():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 1.5, np.zeros(3))
    with pytest.raises(ValueError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))  # reflection


# -- backbone deflection ---------------------------------------------------------

def test_zero_torques_zero_displacement():
    model = BackboneModel()
    assert not deflect_leds(model, 0.0, 0.0).any()


def test_end_station_matches_beam_closed_form():
    model = BackboneModel()
    for moment in (-120.0, -30.0, 55.0, 200.0):
        disp = deflect_leds(model, moment, 0.0)
        expected = cantilever_end_moment_deflection(moment, model.length, model.ei)
        got = disp[0, -1, 1] / model.px_per_mm
        assert got == pytest.approx(expected, rel=1e-12)
        assert disp[0, -1, 0] == 0.0  # no lateral motion from pure bending


def test_pure_twist_antisymmetry():
    model = BackboneModel()
    disp = deflect_leds(model, 0.0, 80.0)
    assert np.allclose(disp[0, :, 0], -disp[1, :, 0])
    assert not disp[:, :, 1].any()
    assert abs(disp[0, -1, 0]) > 1.0  # twist actually visible at the tip


def test_deflection_linearity():
    model = BackboneModel()
    d1 = deflect_leds(model, 40.0, 0.0)
    d2 = deflect_leds(model, 80.0, 0.0)
    assert np.allclose(2.0 * d1, d2, atol=1e-12)
    t1 = deflect_leds(model, 0.0, 30.0)
    t2 = deflect_leds(model, 0.0, 90.0)
    assert np.allclose(3.0 * t1, t2, atol=1e-12)


def test_out_of_regime_raises():
    model = BackboneModel()
    with pytest.raises(TorqueRangeError):
        deflect_leds(model, model.bending_limit + 1.0, 0.0)
    with pytest.raises(TorqueRangeError):
        deflect_leds(model, 0.0, -model.twisting_limit - 0.1)


# -- synthetic rendering ----------------------------------------------------------

def test_zero_displacement_render_matches_fixture():
    model = BackboneModel()
    frame = render_synthetic_frame(model, deflect_leds(model, 0.0, 0.0))
    stored = read_ppm(DATA / "reference_leds.ppm")
    assert np.array_equal(frame_to_uint8(frame), stored)


def test_uniform_displacement_moves_centroid_exactly():
    model = BackboneModel()
    zero = render_synthetic_frame(model, deflect_leds(model, 0.0, 0.0))
    disp = np.zeros((2, model.n_stations, 2))
    disp[:, :, 0] = 3.0
    moved = render_synthetic_frame(model, disp)
    for ch in (0, 1):
        x0, y0 = intensity_centroid(zero[ch])
        x1, y1 = intensity_centroid(moved[ch])
        assert x1 - x0 == pytest.approx(3.0, abs=0.05)
        assert y1 - y0 == pytest.approx(0.0, abs=0.05)


def test_centroid_readback_inverts_deflection():
    model = BackboneModel()

    def render(b, t):
        return render_synthetic_frame(model, deflect_leds(model, b, t))

    base = render(0.0, 0.0)
    estimate = calibrated_centroid_readback(render, base)
    for bending, twisting in [(-90.0, 20.0), (-40.0, -50.0), (30.0, 60.0), (-120.0, 5.0)]:
        eb, et = estimate(render(bending, twisting))
        assert eb == pytest.approx(bending, rel=0.02, abs=0.3)
        assert et == pytest.approx(twisting, rel=0.02, abs=0.3)


def test_station_positions_inside_image():
    model = BackboneModel()
    pts = station_positions(model)
    assert pts[:, 0].min() >= model.x_margin - 1e-9
    assert pts[:, 0].max() <= model.image_width - model.x_margin + 1e-9


# -- dataset ----------------------------------------------------------------------

def test_generate_dataset_deterministic(tmp_path):
    model = BackboneModel()
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate_dataset(a, 6, noise_sigma=1.5, seed=7, model=model)
    generate_dataset(b, 6, noise_sigma=1.5, seed=7, model=model)
    for name in sorted(p.name for p in a.iterdir()):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_dataset_roundtrip(tmp_path):
    model = BackboneModel()
    samples = generate_dataset(tmp_path / "d", 5, noise_sigma=0.0, seed=3, model=model)
    images, targets = load_dataset(tmp_path / "d")
    assert images.shape == (5, 2, model.image_height, model.image_width)
    for s, (b, t) in zip(samples, targets):
        assert s.bending == b and s.twisting == t


def test_sampled_torques_within_regime():
    model = BackboneModel()
    rng = np.random.default_rng(0)
    for _ in range(500):
        b, t = sample_torques(rng, model)
        assert abs(b) <= model.bending_limit
        assert abs(t) <= model.twisting_limit


def test_missing_index_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path)
