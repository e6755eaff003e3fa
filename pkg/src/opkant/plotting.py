"""
Static figures written next to CLI reports.

Every function renders one PNG with the non-interactive Agg backend and
returns the path written.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _scatter(ax, points, sizes=None, **kw):
    points = np.atleast_2d(points)
    y = points[:, 1] if points.shape[1] > 1 else np.zeros(points.shape[0])
    ax.scatter(points[:, 0], y, s=sizes if sizes is not None else 4, **kw)
    if points.shape[1] == 1:
        ax.set_yticks([])
    else:
        ax.set_aspect("equal", adjustable="datalim")


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_points(path, points, title):
    fig, ax = plt.subplots(figsize=(6, 4))
    _scatter(ax, points, color="k")
    ax.set_title(title)
    return _save(fig, path)


def plot_measure(path, points, weights, title):
    """Atoms drawn with area proportional to weight (stems on the line)."""
    points = np.atleast_2d(points)
    weights = np.asarray(weights, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    if points.shape[1] == 1:
        ax.vlines(points[:, 0], 0, weights, color="k", linewidth=0.8)
        ax.set_ylabel("weight")
    else:
        top = weights.max() if weights.size and weights.max() > 0 else 1.0
        _scatter(ax, points, sizes=4 + 60 * weights / top, color="k")
    ax.set_title(title)
    return _save(fig, path)


def plot_residuals(path, residuals, title, floor=None):
    """Residual history on a log scale, with an optional horizontal floor."""
    r = np.asarray(residuals, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    steps = np.arange(1, r.size + 1)
    positive = r > 0
    ax.semilogy(steps[positive], r[positive], "o-", color="k", markersize=3)
    if floor is not None and floor > 0:
        ax.axhline(floor, color="r", linestyle="--", linewidth=0.8, label="quantization floor")
        ax.legend()
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual")
    ax.set_title(title)
    return _save(fig, path)


def plot_support(path, support_points, reference_points, title):
    fig, ax = plt.subplots(figsize=(6, 4))
    _scatter(ax, reference_points, sizes=30, color="0.7", label="attractor approximation")
    _scatter(ax, support_points, sizes=16, marker="x", color="r", label="support")
    ax.legend()
    ax.set_title(title)
    return _save(fig, path)
