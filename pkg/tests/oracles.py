"""Independent reference computations the tests check the library against.

Everything in here is deliberately brute force and shares no code with
the implementations under test.
"""

from __future__ import annotations

import math

import numpy as np


def cox_de_boor_basis(i: int, p: int, u: float, knots) -> float:
    """Textbook recursive basis function N_{i,p}(u)."""
    if p == 0:
        # Half-open spans, closed at the global right end.
        if knots[i] <= u < knots[i + 1]:
            return 1.0
        if u == knots[-1] and knots[i] < knots[i + 1] and knots[i + 1] == knots[-1]:
            return 1.0
        return 0.0
    total = 0.0
    d1 = knots[i + p] - knots[i]
    if d1 > 0.0:
        total += (u - knots[i]) / d1 * cox_de_boor_basis(i, p - 1, u, knots)
    d2 = knots[i + p + 1] - knots[i + 1]
    if d2 > 0.0:
        total += (knots[i + p + 1] - u) / d2 * cox_de_boor_basis(i + 1, p - 1, u, knots)
    return total


def bspline_point_bruteforce(degree, control_points, knots, u):
    """Curve point as the explicit basis-weighted control point sum."""
    x = y = 0.0
    for i, (cx, cy) in enumerate(control_points):
        b = cox_de_boor_basis(i, degree, u, knots)
        x += b * cx
        y += b * cy
    return x, y


def random_clamped_spline(rng, degree, n_ctrl, scale=10.0):
    """Random control points with a random clamped non-decreasing knot vector."""
    pts = [(float(x), float(y)) for x, y in rng.uniform(-scale, scale, size=(n_ctrl, 2))]
    n_interior = n_ctrl - degree - 1
    interior = np.sort(rng.uniform(0.05, 0.95, size=n_interior)).tolist()
    knots = [0.0] * (degree + 1) + interior + [1.0] * (degree + 1)
    return pts, knots


def dense_ray_curve_hits(origin, direction, samples_xy, ts):
    """Ray/curve crossings from a dense sampling of the curve.

    Looks for sign changes of the perpendicular coordinate between
    adjacent samples and linearly interpolates the crossing.  Returns a
    list of (t_ray, point) sorted by ray distance, forward hits only.
    """
    ox, oy = origin
    dx, dy = direction
    px, py = -dy, dx
    rel = samples_xy - np.array([ox, oy])
    d = rel[:, 0] * px + rel[:, 1] * py
    s = rel[:, 0] * dx + rel[:, 1] * dy
    hits = []
    sign_change = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    for i in sign_change:
        frac = d[i] / (d[i] - d[i + 1])
        point = samples_xy[i] + frac * (samples_xy[i + 1] - samples_xy[i])
        t_ray = (point[0] - ox) * dx + (point[1] - oy) * dy
        if t_ray > 1e-9:
            hits.append((float(t_ray), point))
    exact = np.nonzero(d == 0.0)[0]
    for i in exact:
        t_ray = float(s[i])
        if t_ray > 1e-9:
            hits.append((t_ray, samples_xy[i]))
    hits.sort(key=lambda h: h[0])
    return hits


def snell_angle(theta_in: float, n_from: float, n_to: float) -> float:
    """Scalar Snell's law; raises ValueError past the critical angle."""
    s = n_from * math.sin(theta_in) / n_to
    if abs(s) > 1.0:
        raise ValueError("total internal reflection")
    return math.asin(s)


def cantilever_end_moment_deflection(moment: float, s: float, ei: float) -> float:
    """Small-deflection beam bent by an end moment: v(s) = M s^2 / (2 EI)."""
    return moment * s * s / (2.0 * ei)


def intensity_centroid(img: np.ndarray) -> tuple[float, float]:
    """(x, y) centroid of a single-channel intensity image."""
    total = float(img.sum())
    ys, xs = np.mgrid[0:img.shape[0], 0:img.shape[1]]
    return float((img * xs).sum() / total), float((img * ys).sum() / total)


def _denoised(channel: np.ndarray) -> np.ndarray:
    """Suppress background noise and emphasize the LED cores.

    Robust background subtraction, 3-sigma threshold, then squaring: a
    cheap stand-in for matched filtering so the readback degrades
    gracefully under additive pixel noise.
    """
    bg = np.median(channel)
    spread = 1.4826 * np.median(np.abs(channel - bg))
    work = np.clip(channel - bg - 3.0 * spread, 0.0, None)
    return work * work


def calibrated_centroid_readback(render_fn, base_frame,
                                 cal_bending=60.0, cal_twisting=60.0,
                                 denoise=False):
    """Linear torque estimator from channel centroids, calibrated once.

    render_fn(bending, twisting) must produce a (2, h, w) frame.  Bending
    shows up as the mean vertical centroid shift of both strips, twisting
    as the anti-symmetric horizontal shift; both are linear in the torque,
    so two calibration renders fix the gains.  With denoise=True the
    channels are background-subtracted, thresholded and squared first,
    which keeps the estimate useful on noisy frames at the cost of exact
    small-signal linearity.
    """
    prep = _denoised if denoise else (lambda c: c)
    bases = [intensity_centroid(prep(base_frame[k])) for k in (0, 1)]

    def signals(frame):
        cents = [intensity_centroid(prep(frame[k])) for k in (0, 1)]
        dy = ((cents[0][1] - bases[0][1]) + (cents[1][1] - bases[1][1])) / 2.0
        dx = ((cents[0][0] - bases[0][0]) - (cents[1][0] - bases[1][0])) / 2.0
        return dy, dx

    dy_cal, _ = signals(render_fn(cal_bending, 0.0))
    _, dx_cal = signals(render_fn(0.0, cal_twisting))
    gain_bend = dy_cal / cal_bending
    gain_twist = dx_cal / cal_twisting

    def estimate(frame):
        dy, dx = signals(frame)
        return dy / gain_bend, dx / gain_twist

    return estimate


def finite_difference_loss_gradients(loss_fn, params, step=1e-5):
    """Central-difference gradient of loss_fn() w.r.t. every entry of params."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat = p.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            plus = loss_fn()
            flat[i] = orig - step
            minus = loss_fn()
            flat[i] = orig
            gflat[i] = (plus - minus) / (2.0 * step)
        grads.append(g)
    return grads
