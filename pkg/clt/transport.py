"""
Quadratic Wasserstein distances.
"""

import math
from typing import Optional

import numpy as np
import structlog
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from config.settings import KernelSettings
from kernel1d.density import GridDensity1D
from measures.catalog import catalog

logger = structlog.get_logger(__name__)

MAX_ASSIGNMENT = 4096


def _quantile(p: GridDensity1D, u: np.ndarray, side: str) -> np.ndarray:
    """Left or right limit of the generalized inverse of the piecewise-linear CDF."""
    idx = np.searchsorted(p.cdf, u, side=side)
    idx = np.clip(idx, 1, p.grid.m - 1)
    c0, c1 = p.cdf[idx - 1], p.cdf[idx]
    with np.errstate(divide='ignore', invalid='ignore'):
        frac = np.where(c1 > c0, (u - c0) / (c1 - c0), 1.0)
    return p.x[idx - 1] + np.clip(frac, 0.0, 1.0) * p.h


def w2_quantile_1d(p: GridDensity1D, q: GridDensity1D) -> float:
    """W2 between two grid densities through their quantile functions.

    Both quantile functions are piecewise linear between the merged CDF
    breakpoints, so the integral of their squared difference is exact there.
    """
    p.require_normalized()
    q.require_normalized()
    top = min(p.cdf[-1], q.cdf[-1])
    u = np.unique(np.clip(np.concatenate([p.cdf, q.cdf, [0.0, top]]), 0.0, top))
    lo, hi = u[:-1], u[1:]
    a = _quantile(p, lo, 'right') - _quantile(q, lo, 'right')
    b = _quantile(p, hi, 'left') - _quantile(q, hi, 'left')
    w2_squared = float(np.sum((hi - lo) * (a * a + a * b + b * b)) / 3.0)
    return math.sqrt(max(w2_squared, 0.0))


def standard_normal_grid(settings: Optional[KernelSettings] = None) -> GridDensity1D:
    """The standard Gaussian tabulated like any other one-dimensional measure."""
    return GridDensity1D.from_spec(catalog("gaussian"), settings)


def w2_to_gaussian(p: GridDensity1D, reference: Optional[GridDensity1D] = None) -> float:
    return w2_quantile_1d(p, reference if reference is not None else standard_normal_grid())


def w2_empirical_nd(xs: np.ndarray, ys: np.ndarray, max_points: int = MAX_ASSIGNMENT) -> float:
    """Exact W2 between two equal-size empirical measures by linear assignment.

    Raises:
        ValueError: sizes or dimensions differ, or more than ``max_points`` points
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim == 1:
        xs = xs.reshape(-1, 1)
    if ys.ndim == 1:
        ys = ys.reshape(-1, 1)
    if xs.shape != ys.shape:
        raise ValueError(f"Point sets must have equal shapes, got {xs.shape} and {ys.shape}")
    if xs.shape[0] > max_points:
        raise ValueError(f"Linear assignment is limited to {max_points} points, got {xs.shape[0]}")
    cost = cdist(xs, ys, 'sqeuclidean')
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(float(np.mean(cost[rows, cols])))
