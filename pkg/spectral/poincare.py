"""
Poincare constant estimates.

The one-dimensional estimate discretizes the Dirichlet form integral f'^2 dnu
against integral f^2 dnu with piecewise-linear elements: the stiffness uses
the density at cell midpoints, the mass matrix is lumped with trapezoid
weights. The natural boundary condition comes out of the form itself and the
constant vector spans the kernel exactly, so the first positive eigenvalue
is the second one of the symmetric tridiagonal problem.
"""

import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
import structlog
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh, eigh_tridiagonal

from config.settings import GalerkinSettings, IntegrationSettings, SpectralSettings
from core.data_models import ReferenceMode, SpectralMethod, SpectralReport
from core.exceptions import (
    DegenerateFormError,
    DivergentIntegralError,
    QuadratureError,
    SpectralError,
)
from galerkin.assembly import assemble
from galerkin.basis import PolyBasis, weighted_gram
from measures.expressions import expression_weight
from measures.spec import MeasureSpec
from quadrature.grid import Grid1D
from quadrature.integration import NodeSet, integrate, truncate_support, weighted_nodes

logger = structlog.get_logger(__name__)

WeightMap = Callable[[np.ndarray], np.ndarray]

ACTIVE_CUTOFF = 1e-300


def _active_range(values: np.ndarray, name: str, x: np.ndarray) -> Tuple[int, int]:
    active = values > ACTIVE_CUTOFF
    idx = np.flatnonzero(active)
    if idx.size < 3:
        raise SpectralError(f"Density {name} is positive on fewer than three grid nodes")
    first, last = int(idx[0]), int(idx[-1])
    if not np.all(active[first:last + 1]):
        gap = first + int(np.argmin(active[first:last + 1]))
        raise SpectralError(f"Density {name} vanishes at x={x[gap]:.6g} inside its support")
    return first, last


def first_eigenvalue(x: np.ndarray, density: Callable[[np.ndarray], np.ndarray], name: str = "") -> float:
    """Smallest positive eigenvalue of the discretized Dirichlet form on nodes ``x``."""
    p = np.asarray(density(x), dtype=float)
    first, last = _active_range(p, name, x)
    x = x[first:last + 1]
    p = p[first:last + 1]
    h = x[1] - x[0]
    mid = np.asarray(density(0.5 * (x[:-1] + x[1:])), dtype=float)

    mass = p * h
    mass[0] *= 0.5
    mass[-1] *= 0.5
    w = mid / h
    diag = np.zeros(x.size)
    diag[:-1] += w
    diag[1:] += w
    s = 1.0 / np.sqrt(mass)
    try:
        ev = eigh_tridiagonal(diag * s * s, -w * s[:-1] * s[1:], eigvals_only=True,
                              select='i', select_range=(0, 1))
    except (LinAlgError, ValueError) as e:
        raise SpectralError(f"Eigen-solver failed for {name}: {e}")
    lam = float(ev[1])
    if not lam > 0:
        raise SpectralError(f"No positive spectral gap found for {name} (lambda1={lam:.3g})")
    return lam


def poincare_constant_1d(spec: MeasureSpec, m: Optional[int] = None,
                         settings: Optional[SpectralSettings] = None) -> SpectralReport:
    """Finite-difference Poincare constant 1/lambda1, refined until the relative gap is met.

    Raises:
        SpectralError: d != 1, the density vanishes inside the support, or the
            refinement does not converge within ``max_grid`` nodes
    """
    settings = settings or SpectralSettings()
    if spec.dim != 1:
        raise SpectralError(f"Finite-difference Poincare estimates are one-dimensional, got d={spec.dim}")
    (lo, hi), = truncate_support(spec, settings.mass_tol)

    def density(t: np.ndarray) -> np.ndarray:
        return spec.pdf(t.reshape(-1, 1))

    grid = Grid1D(lo, hi, m or settings.initial_grid)
    lam = first_eigenvalue(grid.nodes, density, spec.name)
    gap = math.inf
    while gap >= settings.convergence_gap:
        fine = grid.refined()
        if fine.m > settings.max_grid:
            raise SpectralError(
                f"Poincare estimate for {spec.name} did not converge: relative gap {gap:.3g} at {grid.m} nodes"
            )
        lam_fine = first_eigenvalue(fine.nodes, density, spec.name)
        gap = abs(lam_fine - lam) / lam_fine
        grid, lam = fine, lam_fine
        logger.debug("poincare_refined", measure=spec.name, nodes=grid.m, lambda1=lam, gap=gap)

    logger.info("poincare_estimate", measure=spec.name, cp=1.0 / lam, nodes=grid.m, gap=gap)
    return SpectralReport(
        cp_estimate=1.0 / lam,
        lambda1=lam,
        method=SpectralMethod.FINITE_DIFFERENCE,
        grid_size=grid.m,
        convergence_gap=gap,
        interval=[lo, hi],
    )


def _forms(basis: PolyBasis, nodes: NodeSet) -> Tuple[np.ndarray, np.ndarray]:
    """Covariance Gram and gradient stiffness of the scalar basis."""
    x = nodes.points
    psi = basis.values(x)
    mass = float(np.sum(nodes.weights))
    means = nodes.integrate(psi) / mass
    gram = weighted_gram(nodes, psi - means)
    grads = basis.gradients(x)
    stiffness = sum(weighted_gram(nodes, grads[:, :, j]) for j in range(basis.dim))
    return 0.5 * (gram + gram.T), 0.5 * (stiffness + stiffness.T)


def _largest_generalized(top: np.ndarray, bottom: np.ndarray, what: str) -> Tuple[float, np.ndarray]:
    try:
        values, vectors = eigh(top, bottom)
    except LinAlgError as e:
        raise DegenerateFormError(f"Stiffness form is singular on the basis span ({what}): {e}")
    return float(values[-1]), vectors[:, -1]


def rayleigh_variational_bound(spec: MeasureSpec, basis: PolyBasis, cfg: Optional[IntegrationSettings] = None,
                               nodes: Optional[NodeSet] = None) -> float:
    """Largest Var(f) / integral |grad f|^2 over the basis span; a lower bound on Cp."""
    nodes = nodes or weighted_nodes(spec, cfg)
    gram, stiffness = _forms(basis, nodes)
    value, _ = _largest_generalized(gram, stiffness, "rayleigh quotient")
    logger.debug("rayleigh_bound", measure=spec.name, degree=basis.max_degree, value=value)
    return value


def rayleigh_report(spec: MeasureSpec, basis: PolyBasis, cfg: Optional[IntegrationSettings] = None,
                    nodes: Optional[NodeSet] = None) -> SpectralReport:
    value = rayleigh_variational_bound(spec, basis, cfg, nodes)
    return SpectralReport(
        cp_estimate=value,
        lambda1=1.0 / value,
        method=SpectralMethod.RAYLEIGH_RITZ,
        basis_degree=basis.max_degree,
    )


def resolve_weight(weight: Union[str, WeightMap, None], spec: MeasureSpec) -> WeightMap:
    """Weight map from an expression, a callable, or the measure's own weight."""
    if weight is None:
        weight = spec.weight
    if weight is None:
        raise ValueError(f"No weight function given and {spec.name} declares none")
    if isinstance(weight, str):
        return expression_weight(weight, spec.dim)
    return weight


def weighted_second_moment(spec: MeasureSpec, weight: WeightMap, cfg: Optional[IntegrationSettings] = None) -> float:
    """integral |x|^2 / omega dnu, checked for convergence.

    Raises:
        DivergentIntegralError: the integral does not converge
    """
    def integrand(x: np.ndarray) -> np.ndarray:
        return np.sum(x ** 2, axis=1) / np.asarray(weight(x), dtype=float)

    try:
        estimate = integrate(integrand, spec, cfg)
    except QuadratureError as e:
        raise DivergentIntegralError(f"integral |x|^2/omega against {spec.name} does not converge: {e}")
    if not math.isfinite(estimate.value):
        raise DivergentIntegralError(f"integral |x|^2/omega against {spec.name} is not finite")
    return estimate.value


def converse_weight_bound(spec: MeasureSpec, weight: Union[str, WeightMap, None], basis: PolyBasis,
                          cfg: Optional[IntegrationSettings] = None,
                          nodes: Optional[NodeSet] = None) -> Tuple[float, float]:
    """Second-moment bound integral |x|^2/omega and the converse-inequality witness ratio.

    The witness is max over the span of inf_c integral (f - c)^2 omega / integral |grad f|^2;
    a value above 1 refutes the converse weighted inequality for ``weight``.
    """
    omega = resolve_weight(weight, spec)
    bound = weighted_second_moment(spec, omega, cfg)
    nodes = nodes or weighted_nodes(spec, cfg)
    x = nodes.points
    w = np.asarray(omega(x), dtype=float)
    psi = basis.values(x)
    total = float(nodes.integrate(w))
    first = nodes.integrate(psi * w[:, None])
    weighted = weighted_gram(nodes, psi, psi * w[:, None]) - np.outer(first, first) / total
    _, stiffness = _forms(basis, nodes)
    witness, _ = _largest_generalized(0.5 * (weighted + weighted.T), stiffness, "converse weight")
    logger.info("converse_weight", measure=spec.name, bound=bound, witness=witness)
    return bound, witness


def condition_c_estimate(spec: MeasureSpec, basis: PolyBasis, cfg: Optional[IntegrationSettings] = None,
                         nodes: Optional[NodeSet] = None) -> float:
    """max over the vector span of (integral x.f)^2 / integral ||grad f||^2, which is b' A^-1 b.

    Raises:
        CenteringError: the measure is not centered
        DegenerateFormError: the stiffness form is singular
    """
    system = assemble(spec, basis, ReferenceMode.GAUSSIAN, cfg, GalerkinSettings(), nodes=nodes)
    try:
        factor = cho_factor(system.A, lower=True)
    except LinAlgError as e:
        raise DegenerateFormError(f"Stiffness form of {spec.name} is not positive definite: {e}")
    value = float(system.b @ cho_solve(factor, system.b))
    logger.info("condition_c", measure=spec.name, degree=basis.max_degree, value=value)
    return value
