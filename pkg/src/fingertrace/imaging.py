"""Tactile image preparation.

Difference imaging against a no-contact reference frame, the red-minus-
green monochrome view, LED-region cropping for the torque regressor, and
the scale/shift training augmentation.  Frames are uint8 RGB arrays of
shape (h, w, 3); difference images are signed int16 so nothing clips
before the channel subtraction.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "color_difference",
    "monochrome_difference",
    "monochrome_visualization",
    "crop_led_regions",
    "bilinear_resize",
    "affine_resample",
    "augment",
    "read_ppm",
    "write_ppm",
    "read_pgm",
    "write_pgm",
]

SCALE_RANGE = (0.9, 1.1)
SHIFT_RANGE = 5.0  # px, per axis


def _check_frame(frame: np.ndarray, name: str):
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"{name} must have shape (h, w, 3), got {frame.shape}")


def color_difference(frame: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Signed per-channel difference frame - reference, no clamping."""
    _check_frame(frame, "frame")
    _check_frame(reference, "reference")
    if frame.shape != reference.shape:
        raise ValueError(f"dimension mismatch: {frame.shape} vs {reference.shape}")
    return frame.astype(np.int16) - reference.astype(np.int16)


def monochrome_difference(diff: np.ndarray) -> np.ndarray:
    """Red channel minus green channel of a color difference image."""
    if diff.ndim != 3 or diff.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) difference image, got {diff.shape}")
    return diff[:, :, 0].astype(np.int16) - diff[:, :, 1].astype(np.int16)


def monochrome_visualization(mono: np.ndarray) -> np.ndarray:
    """8-bit view of a signed monochrome image: zero -> 128, clipped at +-127."""
    return np.clip(mono.astype(np.int32) + 128, 0, 255).astype(np.uint8)


def _sample_bilinear(channel: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup with edge clamping; xs/ys are float pixel centers."""
    h, w = channel.shape
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    img = channel.astype(np.float64)
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def bilinear_resize(channel: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize one channel with half-pixel-center sampling.

    Destination pixel (i, j) samples the source at
    ((j + 0.5) * w/out_w - 0.5, (i + 0.5) * h/out_h - 0.5), so an
    identity-size resize copies the input exactly.
    """
    h, w = channel.shape
    sx = w / out_w
    sy = h / out_h
    xs = (np.arange(out_w) + 0.5) * sx - 0.5
    ys = (np.arange(out_h) + 0.5) * sy - 0.5
    gx, gy = np.meshgrid(xs, ys)
    return _sample_bilinear(channel, gx, gy)


def crop_led_regions(diff: np.ndarray, regions, out_size) -> np.ndarray:
    """Cut the two LED strip regions out of a difference image.

    regions: two (x, y, w, h) rectangles, pixel units, inside the image.
    out_size: (out_h, out_w) both regions are resized to.
    Returns a float64 (2, out_h, out_w) stack: channel 0 is the red
    channel of the first region, channel 1 the green channel of the
    second (one LED strip is red, the other green).
    """
    if diff.ndim != 3 or diff.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) difference image, got {diff.shape}")
    if len(regions) != 2:
        raise ValueError("exactly two LED regions required")
    out_h, out_w = out_size
    h, w = diff.shape[:2]
    channels = []
    for idx, ((x, y, rw, rh), chan) in enumerate(zip(regions, (0, 1))):
        if x < 0 or y < 0 or rw <= 0 or rh <= 0 or x + rw > w or y + rh > h:
            raise ValueError(f"region {idx} {(x, y, rw, rh)} outside image bounds {(w, h)}")
        patch = diff[y:y + rh, x:x + rw, chan]
        channels.append(bilinear_resize(patch, out_h, out_w))
    return np.stack(channels)


def affine_resample(image: np.ndarray, scale: float, shift) -> np.ndarray:
    """Scale about the image center then shift by (dx, dy) px, edge padding.

    Works on (h, w) or (c, h, w) arrays; channels share the transform.
    """
    single = image.ndim == 2
    stack = image[None] if single else image
    _, h, w = stack.shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    dx, dy = float(shift[0]), float(shift[1])
    xs = np.arange(w, dtype=float)
    ys = np.arange(h, dtype=float)
    gx, gy = np.meshgrid(xs, ys)
    src_x = cx + (gx - dx - cx) / scale
    src_y = cy + (gy - dy - cy) / scale
    out = np.stack([_sample_bilinear(c, src_x, src_y) for c in stack])
    return out[0] if single else out


def augment(image: np.ndarray, seed: int) -> np.ndarray:
    """Seeded random scale in [0.9, 1.1] and shift in [-5, 5] px per axis."""
    rng = np.random.default_rng(seed)
    scale = rng.uniform(*SCALE_RANGE)
    shift = rng.uniform(-SHIFT_RANGE, SHIFT_RANGE, size=2)
    return affine_resample(image, scale, shift)


# ---------------------------------------------------------------------------
# Portable pixmap I/O
# ---------------------------------------------------------------------------

def write_ppm(path, frame: np.ndarray):
    """Binary P6, 8-bit RGB."""
    _check_frame(frame, "frame")
    if frame.dtype != np.uint8:
        raise ValueError("P6 frames must be uint8")
    h, w = frame.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def write_pgm(path, gray: np.ndarray):
    """Binary P5, 8-bit grayscale (use monochrome_visualization for signed data)."""
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError("P5 images must be 2-D uint8")
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def _read_pnm_header(data: bytes, magic: bytes):
    if not data.startswith(magic):
        raise ValueError(f"not a {magic.decode()} file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    return fields[0], fields[1], fields[2], pos + 1


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    w, h, maxval, offset = _read_pnm_header(data, b"P6")
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=offset)
    return pixels.reshape(h, w, 3).copy()


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    w, h, maxval, offset = _read_pnm_header(data, b"P5")
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=offset)
    return pixels.reshape(h, w).copy()
