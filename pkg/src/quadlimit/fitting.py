"""Power-law exponent fits on log-log scale."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    stderr: float
    window: tuple
    n_points: int


def fit_exponent(points, window) -> FitResult:
    """Least-squares slope of ``log y`` against ``log x`` for the points
    with ``lo <= x <= hi``.

    Parameters
    ----------
    points : sequence of (x, y) with positive entries
    window : (lo, hi)
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    lo, hi = window
    sel = pts[(pts[:, 0] >= lo) & (pts[:, 0] <= hi)]
    if len(sel) < 3:
        raise ConfigError(f"need at least 3 points in window {window}, got {len(sel)}")
    if np.any(sel <= 0):
        raise ConfigError("points must be positive for a log-log fit")
    x, y = np.log(sel[:, 0]), np.log(sel[:, 1])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    dof = len(x) - 2
    sxx = np.sum((x - x.mean()) ** 2)
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    stderr = float(np.sqrt(max(s2, 0.0) / sxx)) if sxx > 0 else float("inf")
    return FitResult(float(slope), float(intercept), stderr, (lo, hi), len(sel))


def local_slopes(x, y) -> np.ndarray:
    """Centered log-log derivative, useful to see how fast an exponent
    settles."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return np.gradient(ly, lx)
