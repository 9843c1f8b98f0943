"""Design scoring: skin coverage, imaging-angle profile, spatial resolution.

Coverage is the fraction of skin arc length whose gap to the nearest
pixel hit stays below twice the local inter-hit spacing; the imaging
angle is measured against the skin tangent (90 degrees = head-on, small
angles = grazing and useless); resolution is pixels per millimeter of
skin arc, central-differenced along the pixel fan.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .geometry import BSplineCurve, CircularArc
from .scene import SkinHit, TraceResult

Skin = BSplineCurve | CircularArc

__all__ = [
    "DesignMetrics",
    "coverage",
    "imaging_angles",
    "resolution_profile",
    "resolution_by_pixel",
    "hit_table",
    "compute_metrics",
]

# Arc gaps this many times the local hit spacing count as blind zones.
COVERAGE_GAP_FACTOR = 2.0
# Pixel-order arc jumps this many times the run median split a ray family.
_RUN_SPLIT_FACTOR = 8.0


@dataclass(frozen=True)
class DesignMetrics:
    coverage: float
    imaging_angle_profile: tuple[tuple[float, float], ...]   # (arc mm, degrees)
    resolution_profile: tuple[tuple[float, float], ...]      # (arc mm, px/mm)
    min_imaging_angle: float                                  # degrees; 0 when no hits


def _skin_hits(traces) -> list[tuple[int, float, float]]:
    """(pixel_index, t_skin, incidence angle rad) for every skin hit, pixel order."""
    out = []
    for tr in traces:
        if isinstance(tr.terminal, SkinHit):
            out.append((tr.pixel_index, tr.terminal.t_skin, tr.terminal.incidence_angle))
    return out


def _hit_positions(traces, skin: Skin):
    hits = _skin_hits(traces)
    positions = [float(s) for s in skin.arc_length_many([t for _, t, _ in hits])]
    return hits, positions


def _local_spacing(gaps: list[float], window: int = 9) -> list[float]:
    half = window // 2
    return [statistics.median(gaps[max(0, i - half):i + half + 1])
            for i in range(len(gaps))]


def _coverage_from(positions: list[float], total: float) -> float:
    if len(positions) < 2:
        return 0.0
    s = sorted(positions)
    gaps = [b - a for a, b in zip(s[:-1], s[1:])]
    local = _local_spacing(gaps)
    covered = sum(g for g, loc in zip(gaps, local) if g <= COVERAGE_GAP_FACTOR * loc)
    # End segments follow the same rule against their nearest gap scale.
    if s[0] <= COVERAGE_GAP_FACTOR * local[0]:
        covered += s[0]
    if total - s[-1] <= COVERAGE_GAP_FACTOR * local[-1]:
        covered += total - s[-1]
    return min(1.0, covered / total)


def coverage(traces: list[TraceResult], skin: Skin) -> float:
    """Covered arc length / total arc length, in [0, 1]."""
    _, positions = _hit_positions(traces, skin)
    return _coverage_from(positions, skin.arc_length())


def _angles_from(hits, positions) -> list[tuple[float, float]]:
    profile = [(s, math.degrees(a)) for s, (_, _, a) in zip(positions, hits)]
    profile.sort()
    return profile


def imaging_angles(traces: list[TraceResult], skin: Skin) -> list[tuple[float, float]]:
    """(arc position mm, imaging angle deg) per skin hit, sorted by position."""
    hits, positions = _hit_positions(traces, skin)
    return _angles_from(hits, positions)


def _pixel_runs(hits: list[tuple[int, float]]) -> list[list[tuple[int, float]]]:
    """Split (pixel, arc) pairs into contiguous same-family runs.

    A family breaks at pixel-index gaps and at arc jumps far larger than
    the locally typical spacing (the fan switching between the direct and
    the mirror-folded route).
    """
    runs: list[list[tuple[int, float]]] = []
    cur: list[tuple[int, float]] = []
    for pix, s in hits:
        if cur and pix != cur[-1][0] + 1:
            runs.append(cur)
            cur = []
        cur.append((pix, s))
    if cur:
        runs.append(cur)

    split: list[list[tuple[int, float]]] = []
    for run in runs:
        if len(run) < 3:
            split.append(run)
            continue
        deltas = [abs(b[1] - a[1]) for a, b in zip(run[:-1], run[1:])]
        med = statistics.median(deltas)
        limit = _RUN_SPLIT_FACTOR * med if med > 0 else float("inf")
        piece = [run[0]]
        for pair, d in zip(run[1:], deltas):
            if d > limit:
                split.append(piece)
                piece = []
            piece.append(pair)
        split.append(piece)
    return split


def _resolution_from(hits, positions, pixels_per_ray: float) -> dict[int, tuple[float, float]]:
    pairs = [(pix, s) for (pix, _, _), s in zip(hits, positions)]
    out: dict[int, tuple[float, float]] = {}
    for run in _pixel_runs(pairs):
        if len(run) < 2:
            continue
        for k, (pix, s) in enumerate(run):
            if 0 < k < len(run) - 1:
                ds = abs(run[k + 1][1] - run[k - 1][1])
                dpx = run[k + 1][0] - run[k - 1][0]
            elif k == 0:
                ds = abs(run[1][1] - run[0][1])
                dpx = run[1][0] - run[0][0]
            else:
                ds = abs(run[k][1] - run[k - 1][1])
                dpx = run[k][0] - run[k - 1][0]
            if ds > 1e-12:
                out[pix] = (s, pixels_per_ray * dpx / ds)
    return out


def resolution_by_pixel(traces: list[TraceResult], skin: Skin,
                        pixels_per_ray: float = 1.0) -> dict[int, tuple[float, float]]:
    """pixel index -> (arc position mm, px/mm).  Needs >= 2 skin hits."""
    hits, positions = _hit_positions(traces, skin)
    if len(hits) < 2:
        raise ValueError("resolution profile needs at least 2 skin hits")
    return _resolution_from(hits, positions, pixels_per_ray)


def resolution_profile(traces: list[TraceResult], skin: Skin,
                       pixels_per_ray: float = 1.0) -> list[tuple[float, float]]:
    """(arc position mm, px/mm) per resolvable skin hit, sorted by position."""
    return sorted(resolution_by_pixel(traces, skin, pixels_per_ray).values())


def hit_table(traces: list[TraceResult], skin: Skin,
              pixels_per_ray: float = 1.0) -> list[tuple[int, float, float, float]]:
    """Per-hit rows (pixel_index, arc_mm, angle_deg, px_per_mm), pixel order.

    px_per_mm is NaN for hits whose ray family is too short to difference.
    """
    hits, positions = _hit_positions(traces, skin)
    res = _resolution_from(hits, positions, pixels_per_ray) if len(hits) >= 2 else {}
    rows = []
    for (pix, _, ang), s in zip(hits, positions):
        pxmm = res.get(pix, (s, float("nan")))[1]
        rows.append((pix, s, math.degrees(ang), pxmm))
    return rows


def compute_metrics(traces: list[TraceResult], skin: Skin,
                    pixels_per_ray: float = 1.0) -> DesignMetrics:
    hits, positions = _hit_positions(traces, skin)
    angle_prof = _angles_from(hits, positions)
    res_prof = sorted(_resolution_from(hits, positions, pixels_per_ray).values()) \
        if len(hits) >= 2 else []
    return DesignMetrics(
        coverage=_coverage_from(positions, skin.arc_length()),
        imaging_angle_profile=tuple(angle_prof),
        resolution_profile=tuple(res_prof),
        min_imaging_angle=min((a for _, a in angle_prof), default=0.0),
    )
