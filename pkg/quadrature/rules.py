"""
Gauss-Legendre rules and composite panel rules.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights exact for polynomials up to ``exactness_degree``."""
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


@lru_cache(maxsize=64)
def _reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def legendre_rule(order: int, lo: float = -1.0, hi: float = 1.0) -> QuadratureRule:
    """``order``-point Gauss-Legendre rule mapped to [lo, hi]."""
    if order < 1:
        raise ValueError(f"Gauss-Legendre order must be >= 1, got {order}")
    if not lo < hi:
        raise ValueError(f"Interval must satisfy lo < hi, got ({lo}, {hi})")
    x, w = _reference_rule(order)
    half = 0.5 * (hi - lo)
    return QuadratureRule(
        nodes=lo + half * (x + 1.0),
        weights=half * w,
        exactness_degree=2 * order - 1,
    )


def panel_breakpoints(lo: float, hi: float, panels: int, kinks: Iterable[float] = ()) -> np.ndarray:
    """Uniform panel edges on [lo, hi] with kink locations inserted."""
    edges = np.linspace(lo, hi, max(1, panels) + 1)
    inner = [k for k in kinks if lo < k < hi]
    if inner:
        edges = np.unique(np.concatenate([edges, inner]))
    return edges


def composite_rule(edges: np.ndarray, order: int) -> QuadratureRule:
    """Gauss-Legendre rule of ``order`` points on every panel between ``edges``."""
    x, w = _reference_rule(order)
    lo = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    nodes = (lo + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return QuadratureRule(nodes=nodes, weights=weights, exactness_degree=2 * order - 1)
