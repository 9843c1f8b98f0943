"""Proprioceptive torque pipeline: ground truth, forward model, synthesis.

Finger frame convention: origin at the finger base, x along the finger
(base to tip), z the outward skin normal, y = z cross x (lateral).
Bending torque is the moment about y ("finger bends up"), twisting the
moment about x.  Torques are N*mm.

The backbone forward model is a small-deflection cantilever: an applied
bending moment M displaces a point at distance s along the finger by
M*s^2/(2*EI); twist rotates the cross-section by T*s/GJ, sliding the two
LED strips (mounted at lateral offset +-h) in opposite directions.  The
synthetic renderer draws each strip as a dotted polyline of Gaussian LED
splats, one strip per image channel, mimicking the cropped two-channel
camera view.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import read_ppm, write_ppm

__all__ = [
    "TorqueRangeError",
    "RigidTransform",
    "torques_from_wrench",
    "transform_to_finger_frame",
    "BackboneModel",
    "deflect_leds",
    "render_synthetic_frame",
    "station_positions",
    "sample_torques",
    "generate_dataset",
    "load_dataset",
    "TorqueSample",
    "BENDING_MEAN",
    "BENDING_STD",
    "TWISTING_MEAN",
    "TWISTING_STD",
]

# Training-population torque statistics (N*mm).
BENDING_MEAN = -62.4
BENDING_STD = 28.3
TWISTING_MEAN = 5.4
TWISTING_STD = 27.3


class TorqueRangeError(ValueError):
    """Torque outside the small-deflection regime of the backbone model."""


def torques_from_wrench(contact_point, force) -> tuple[float, float]:
    """(bending, twisting) torque of a contact force about the finger base.

    bending = (p x F) . y_hat, twisting = (p x F) . x_hat, inputs in the
    finger frame (mm, N).
    """
    p = np.asarray(contact_point, dtype=float)
    f = np.asarray(force, dtype=float)
    tau = np.cross(p, f)
    return float(tau[1]), float(tau[0])


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation; rotation must be orthonormal with det 1."""

    rotation: np.ndarray      # (3, 3)
    translation: np.ndarray   # (3,)

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rigid transform needs a 3x3 rotation and 3-vector translation")
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal")
        if abs(abs(np.linalg.det(r)) - 1.0) > 1e-9 or np.linalg.det(r) < 0:
            raise ValueError("rotation determinant must be +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self o other (apply `other` first)."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def apply_point(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def apply_vector(self, v) -> np.ndarray:
        return self.rotation @ np.asarray(v, dtype=float)


def transform_to_finger_frame(probe_pose: RigidTransform, finger_pose: RigidTransform,
                              force_in_probe, contact_in_probe):
    """Express a probe-frame contact in the finger frame.

    Points get the full finger_pose^-1 o probe_pose; the force only the
    rotation part.
    """
    rel = finger_pose.inverse().compose(probe_pose)
    return rel.apply_point(contact_in_probe), rel.apply_vector(force_in_probe)


# ---------------------------------------------------------------------------
# Backbone forward model and synthetic LED frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BackboneModel:
    length: float = 80.0            # mm
    ei: float = 45000.0             # N*mm^2 bending stiffness
    gj: float = 8000.0              # N*mm^2/rad torsional stiffness
    strip_offset: float = 6.0       # mm lateral LED offset (h)
    n_stations: int = 9             # LEDs per strip
    px_per_mm: float = 1.0
    image_height: int = 32
    image_width: int = 64
    strip_row: float = 16.0         # base row of each strip in its channel
    x_margin: float = 10.0          # px inset of the first/last LED
    bending_limit: float = 250.0    # N*mm small-deflection bound
    twisting_limit: float = 250.0
    dot_sigma: float = 1.2
    dot_peak: float = 230.0
    segment_level: float = 80.0

    def __post_init__(self):
        if min(self.length, self.ei, self.gj, self.strip_offset, self.n_stations) <= 0:
            raise ValueError("backbone dimensions and stiffnesses must be positive")

    def stations(self) -> np.ndarray:
        """Distances of the LED stations from the base, mm."""
        return np.linspace(0.0, self.length, self.n_stations)


def deflect_leds(model: BackboneModel, bending: float, twisting: float) -> np.ndarray:
    """Per-station pixel displacements, shape (2 strips, m stations, [dx, dy]).

    dy = bending * s^2 / (2 EI) * k_px for both strips; dx = +-(twisting
    * s / GJ) * h * k_px with opposite signs for the two strips.
    """
    if abs(bending) > model.bending_limit:
        raise TorqueRangeError(
            f"bending {bending} N*mm outside +-{model.bending_limit}")
    if abs(twisting) > model.twisting_limit:
        raise TorqueRangeError(
            f"twisting {twisting} N*mm outside +-{model.twisting_limit}")
    s = model.stations()
    dy = bending * s ** 2 / (2.0 * model.ei) * model.px_per_mm
    dx = (twisting * s / model.gj) * model.strip_offset * model.px_per_mm
    strip_a = np.stack([dx, dy], axis=1)
    strip_b = np.stack([-dx, dy], axis=1)
    return np.stack([strip_a, strip_b])


def station_positions(model: BackboneModel) -> np.ndarray:
    """Undeflected LED pixel positions (m, [x, y]) shared by both channels."""
    xs = np.linspace(model.x_margin, model.image_width - 1 - model.x_margin,
                     model.n_stations)
    ys = np.full(model.n_stations, model.strip_row)
    return np.stack([xs, ys], axis=1)


def _splat_gaussian(img: np.ndarray, x: float, y: float, peak: float, sigma: float):
    h, w = img.shape
    r = int(math.ceil(4.0 * sigma))
    x0, x1 = max(0, int(x) - r), min(w, int(x) + r + 2)
    y0, y1 = max(0, int(y) - r), min(h, int(y) + r + 2)
    if x0 >= x1 or y0 >= y1:
        return
    gx = np.arange(x0, x1) - x
    gy = np.arange(y0, y1) - y
    patch = peak * np.exp(-(gx[None, :] ** 2 + gy[:, None] ** 2) / (2.0 * sigma ** 2))
    img[y0:y1, x0:x1] += patch


def render_synthetic_frame(model: BackboneModel, displacements: np.ndarray,
                           size=None) -> np.ndarray:
    """Draw the two displaced LED strips, one per channel; float in [0, 255].

    Each strip is a dotted polyline: dim anti-aliased segments between
    stations plus a bright Gaussian splat per LED.
    """
    h = model.image_height if size is None else size[0]
    w = model.image_width if size is None else size[1]
    frame = np.zeros((2, h, w))
    base = station_positions(model)
    for strip in range(2):
        pts = base + displacements[strip]
        chan = frame[strip]
        for (xa, ya), (xb, yb) in zip(pts[:-1], pts[1:]):
            seg_len = math.hypot(xb - xa, yb - ya)
            n = max(2, int(seg_len / 0.5))
            for frac in np.linspace(0.15, 0.85, n):
                _splat_gaussian(chan, xa + frac * (xb - xa), ya + frac * (yb - ya),
                                model.segment_level / n * 2.0, model.dot_sigma)
        for x, y in pts:
            _splat_gaussian(chan, float(x), float(y), model.dot_peak, model.dot_sigma)
    return np.clip(frame, 0.0, 255.0)


# ---------------------------------------------------------------------------
# Synthetic dataset
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorqueSample:
    filename: str
    bending: float
    twisting: float


def sample_torques(rng: np.random.Generator, model: BackboneModel) -> tuple[float, float]:
    """Draw one (bending, twisting) pair from the population statistics."""
    margin = 1e-6
    bending = float(np.clip(rng.normal(BENDING_MEAN, BENDING_STD),
                            -model.bending_limit + margin, model.bending_limit - margin))
    twisting = float(np.clip(rng.normal(TWISTING_MEAN, TWISTING_STD),
                             -model.twisting_limit + margin, model.twisting_limit - margin))
    return bending, twisting


def frame_to_uint8(frame: np.ndarray) -> np.ndarray:
    """(2, h, w) float -> (h, w, 3) uint8 with the blue channel empty."""
    h, w = frame.shape[1:]
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    rgb[:, :, 0] = np.clip(np.rint(frame[0]), 0, 255).astype(np.uint8)
    rgb[:, :, 1] = np.clip(np.rint(frame[1]), 0, 255).astype(np.uint8)
    return rgb


def generate_dataset(out_dir, n: int, noise_sigma: float, seed: int,
                     model: BackboneModel = BackboneModel()) -> list[TorqueSample]:
    """Write n synthetic LED frames plus index.csv; fully seeded."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        bending, twisting = sample_torques(rng, model)
        frame = render_synthetic_frame(model, deflect_leds(model, bending, twisting))
        if noise_sigma > 0.0:
            frame = np.clip(frame + rng.normal(0.0, noise_sigma, size=frame.shape),
                            0.0, 255.0)
        name = f"sample_{i:05d}.ppm"
        write_ppm(out / name, frame_to_uint8(frame))
        samples.append(TorqueSample(name, bending, twisting))
    with open(out / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "bending_Nmm", "twisting_Nmm"])
        for s in samples:
            writer.writerow([s.filename, repr(s.bending), repr(s.twisting)])
    return samples


def load_dataset(dataset_dir) -> tuple[np.ndarray, np.ndarray]:
    """Read index.csv + frames: (images (n, 2, h, w) float, targets (n, 2))."""
    root = Path(dataset_dir)
    index = root / "index.csv"
    if not index.exists():
        raise FileNotFoundError(f"no index.csv in {root}")
    images = []
    targets = []
    with open(index, newline="") as fh:
        for row in csv.DictReader(fh):
            rgb = read_ppm(root / row["filename"])
            images.append(np.stack([rgb[:, :, 0], rgb[:, :, 1]]).astype(float))
            targets.append((float(row["bending_Nmm"]), float(row["twisting_Nmm"])))
    return np.array(images), np.array(targets)
