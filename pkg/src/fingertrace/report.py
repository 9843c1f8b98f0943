"""Matplotlib report figures rendered to PNG bytes.

Every figure is produced with the Agg backend at fixed size/dpi so two
runs over the same data emit identical files.
"""

from __future__ import annotations

import io

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["metrics_figure", "history_figure", "loss_figure", "scatter_figure"]

_DPI = 110


def _render(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=_DPI, metadata={"Software": "fingertrace"})
    plt.close(fig)
    return buf.getvalue()


def metrics_figure(metrics) -> bytes:
    """Imaging angle and px/mm along the skin arc, stacked panels."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    if metrics.imaging_angle_profile:
        s, a = zip(*metrics.imaging_angle_profile)
        ax1.plot(s, a, ".", markersize=2, color="#d04040")
    ax1.set_ylabel("imaging angle [deg]")
    ax1.axhline(10.0, color="#999", linewidth=0.8, linestyle="--")
    ax1.set_title(f"coverage {metrics.coverage:.3f}, "
                  f"min angle {metrics.min_imaging_angle:.1f} deg")
    if metrics.resolution_profile:
        s, r = zip(*metrics.resolution_profile)
        ax2.plot(s, r, ".", markersize=2, color="#2e6fb0")
    ax2.set_ylabel("resolution [px/mm]")
    ax2.set_xlabel("skin arc position [mm]")
    fig.tight_layout()
    return _render(fig)


def history_figure(history) -> bytes:
    """Optimization score trace with its running maximum."""
    fig, ax = plt.subplots(figsize=(7, 4))
    scores = [h.score for h in history]
    ax.plot(scores, ".", markersize=2, color="#888", label="evaluation")
    ax.plot(np.maximum.accumulate(scores), color="#d04040", label="best so far")
    lo = np.percentile(scores, 2) if scores else 0.0
    ax.set_ylim(bottom=max(lo, min(scores) if scores else 0.0) - 1.0)
    ax.set_xlabel("evaluation")
    ax.set_ylabel("score")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return _render(fig)


def loss_figure(history: list[float]) -> bytes:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(history, color="#2e6fb0")
    ax.set_xlabel("epoch")
    ax.set_ylabel("training MSE (standardized)")
    fig.tight_layout()
    return _render(fig)


def scatter_figure(targets: np.ndarray, predictions: np.ndarray) -> bytes:
    """Predicted vs true torques, one panel per component."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2))
    labels = ("bending torque [N mm]", "twisting torque [N mm]")
    for k, (ax, label) in enumerate(zip(axes, labels)):
        t = targets[:, k]
        p = predictions[:, k]
        lo, hi = float(min(t.min(), p.min())), float(max(t.max(), p.max()))
        pad = 0.05 * (hi - lo + 1e-9)
        ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], color="#999", linewidth=0.8)
        ax.plot(t, p, ".", markersize=3, color="#d04040", alpha=0.6)
        ax.set_xlabel(f"true {label}")
        ax.set_ylabel(f"estimated {label}")
        ax.set_aspect("equal")
    fig.tight_layout()
    return _render(fig)
