"""
Integration against measures.

Tensor Gauss-Legendre panels on a truncated box for low dimensions, seeded
Monte Carlo otherwise. Panel edges are aligned with the kink locations a
measure declares. Every weighted sum is reduced in node order, so results
do not depend on evaluation scheduling.
"""

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import structlog

from config.settings import IntegrationSettings
from core.exceptions import QuadratureError, TruncationError
from measures.sampling import sample
from measures.spec import Bounds, MeasureSpec
from quadrature.rules import composite_rule, panel_breakpoints

logger = structlog.get_logger(__name__)

MAX_DOUBLINGS = 60
MASS_FLOOR = 1e-12
_MASS_ORDER = 32
WIDE_BOX = 128.0


@dataclass(frozen=True)
class NodeSet:
    """Points with density-weights: sum(w * f(x)) approximates the integral of f."""
    points: np.ndarray
    weights: np.ndarray
    monte_carlo: bool = False

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum of ``values`` (N,) or (N, k...) over the nodes."""
        values = np.asarray(values, dtype=float)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return self.integrate(f(self.points))

    def standard_error(self, values: np.ndarray) -> float:
        """Monte Carlo standard error of the mean of ``values`` (0 for tensor rules)."""
        if not self.monte_carlo:
            return 0.0
        values = np.asarray(values, dtype=float)
        return float(np.std(values, ddof=1) / math.sqrt(values.shape[0]))


@dataclass(frozen=True)
class IntegralEstimate:
    """Value of an integral with its error estimate."""
    value: float
    error: float
    nodes: int
    method: str

    def __iter__(self):
        yield self.value
        yield self.error


def _intersect(a: Bounds, b: Bounds) -> Bounds:
    return tuple((max(lo1, lo2), min(hi1, hi2)) for (lo1, hi1), (lo2, hi2) in zip(a, b))


def _dyadic_edges(lo: float, hi: float, kinks: Sequence[float]) -> np.ndarray:
    """Panel edges refined geometrically towards the origin (or the finite end)."""
    center = min(max(0.0, lo), hi)
    edges = [lo, hi, center]
    for j in range(-6, 64):
        step = 2.0 ** j
        if center - step > lo:
            edges.append(center - step)
        if center + step < hi:
            edges.append(center + step)
        if center - step <= lo and center + step >= hi:
            break
    edges.extend(k for k in kinks if lo < k < hi)
    return np.unique(np.asarray(edges, dtype=float))


def _box_mass(spec: MeasureSpec, box: Bounds) -> float:
    """Density mass inside ``box`` (d <= 2)."""
    rules = [composite_rule(_dyadic_edges(lo, hi, spec.kinks_for_axis(i)), _MASS_ORDER)
             for i, (lo, hi) in enumerate(box)]
    points, weights = _tensor(rules)
    return float(np.dot(weights, spec.pdf(points)))


def _tensor(rules) -> Tuple[np.ndarray, np.ndarray]:
    mesh = np.meshgrid(*[r.nodes for r in rules], indexing='ij')
    points = np.column_stack([g.ravel() for g in mesh])
    weights = reduce(np.multiply.outer, [r.weights for r in rules]).ravel()
    return points, weights


def _doubling_sweep(spec: MeasureSpec, mass_tol: float) -> Bounds:
    if spec.dim > 2:
        raise TruncationError(f"Measure {spec.name} in d={spec.dim} needs an explicit tail bound")
    tol = max(mass_tol, MASS_FLOOR)
    bounds = spec.support.bounds
    centers = [min(max(0.0, lo), hi) for lo, hi in bounds]
    width = 1.0
    previous: Optional[float] = None
    for _ in range(MAX_DOUBLINGS):
        box = tuple((max(lo, c - width), min(hi, c + width)) for (lo, hi), c in zip(bounds, centers))
        mass = _box_mass(spec, box)
        if spec.normalized:
            done = 1.0 - mass <= tol
        else:
            done = previous is not None and mass > 0 and abs(mass - previous) <= tol * mass
        if done:
            return box
        previous = mass
        width *= 2.0
    raise TruncationError(
        f"Support truncation of {spec.name} did not converge within {MAX_DOUBLINGS} doublings"
    )


def truncate_support(spec: MeasureSpec, mass_tol: float) -> Bounds:
    """Axis-aligned box carrying at least 1 - mass_tol of the mass of ``spec``."""
    bounds = spec.support.bounds
    if spec.support.is_compact():
        return bounds
    if spec.tail_bound is not None:
        box = _intersect(bounds, spec.tail_bound(mass_tol))
        if spec.dim > 2 or not spec.normalized:
            return box
        missing = 1.0 - _box_mass(spec, box)
        if missing <= max(mass_tol, MASS_FLOOR) + MASS_FLOOR:
            return box
        logger.warning("tail_bound_rejected", measure=spec.name, missing_mass=missing)
    return _doubling_sweep(spec, mass_tol)


def _panel_edges(lo: float, hi: float, panels: int, kinks: Sequence[float]) -> np.ndarray:
    edges = panel_breakpoints(lo, hi, panels, kinks)
    if hi - lo > WIDE_BOX:
        # heavy tails: keep the bulk resolved on very wide boxes
        edges = np.union1d(edges, _dyadic_edges(lo, hi, kinks))
    return edges


def use_monte_carlo(spec: MeasureSpec, cfg: IntegrationSettings) -> bool:
    return cfg.mode == "mc" or spec.quadrature_hint == "mc" or spec.dim > cfg.max_tensor_dim


def weighted_nodes(spec: MeasureSpec, cfg: Optional[IntegrationSettings] = None,
                   panel_scale: float = 1.0) -> NodeSet:
    """Integration nodes for ``spec`` with the density folded into the weights."""
    cfg = cfg or IntegrationSettings()
    if use_monte_carlo(spec, cfg):
        points = sample(spec, cfg.mc_samples, cfg.seed)
        return NodeSet(points, np.full(points.shape[0], 1.0 / points.shape[0]), monte_carlo=True)
    box = truncate_support(spec, cfg.mass_tol)
    order, panels = cfg.rule_for(spec.dim)
    panels = max(1, int(round(panels * panel_scale)))
    rules = [composite_rule(_panel_edges(lo, hi, panels, spec.kinks_for_axis(i)), order)
             for i, (lo, hi) in enumerate(box)]
    total = math.prod(r.nodes.size for r in rules)
    if total > cfg.max_nodes:
        raise QuadratureError(f"Tensor rule needs {total} nodes, above the limit {cfg.max_nodes}")
    points, weights = _tensor(rules)
    weights = weights * spec.pdf(points)
    keep = weights > 0
    return NodeSet(points[keep], weights[keep])


def _node_count(spec: MeasureSpec, cfg: IntegrationSettings, panel_scale: float) -> int:
    order, panels = cfg.rule_for(spec.dim)
    per_axis = order * (max(1, int(round(panels * panel_scale))) + max(len(k) for k in spec.kinks or ((),)))
    return per_axis ** spec.dim


def integrate(f: Callable[[np.ndarray], np.ndarray], spec: MeasureSpec,
              cfg: Optional[IntegrationSettings] = None, abs_tol: Optional[float] = None,
              rel_tol: Optional[float] = None) -> IntegralEstimate:
    """Integral of ``f`` against ``spec`` with an error estimate.

    Tensor mode compares the panel rule with the rule on half as many panels
    and converts the difference into a Richardson estimate for the finer rule;
    panels are doubled until the estimate meets the tolerance.
    Monte Carlo mode returns the sample mean and its standard error.
    """
    cfg = cfg or IntegrationSettings()
    abs_tol = cfg.abs_tol if abs_tol is None else abs_tol
    rel_tol = cfg.rel_tol if rel_tol is None else rel_tol

    if use_monte_carlo(spec, cfg):
        nodes = weighted_nodes(spec, cfg)
        values = np.asarray(f(nodes.points), dtype=float)
        return IntegralEstimate(float(np.mean(values)), nodes.standard_error(values), nodes.size, "mc")

    order, _ = cfg.rule_for(spec.dim)
    # composite rule of exactness q gains 2^(q+1) per halving, capped to stay conservative
    richardson = 2.0 ** min(2 * order, 10) - 1.0
    scale = 1.0
    coarse = weighted_nodes(spec, cfg, 0.5)
    coarse_value = float(coarse.expect(f))
    while True:
        fine = weighted_nodes(spec, cfg, scale)
        value = float(fine.expect(f))
        error = abs(value - coarse_value) / richardson
        if not math.isfinite(value):
            raise QuadratureError(f"Integral against {spec.name} is not finite")
        if error <= max(abs_tol, rel_tol * abs(value)):
            return IntegralEstimate(value, error, fine.size, "tensor")
        if _node_count(spec, cfg, 2.0 * scale) > cfg.max_nodes:
            raise QuadratureError(
                f"Integral against {spec.name} did not reach tolerance: error estimate {error:.3g} "
                f"with {fine.size} nodes"
            )
        logger.debug("integral_refined", measure=spec.name, panels_scale=2.0 * scale, error=error)
        coarse_value = value
        scale *= 2.0
