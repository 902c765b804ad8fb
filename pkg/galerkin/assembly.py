"""
Assembly of the Galerkin stiffness system.

The vector-valued basis is Phi_(i, alpha) = e_i psi_alpha, so the stiffness
matrix is block diagonal, A = I_d (x) S with S the scalar gradient Gram
matrix, and the right-hand side is b_(i, alpha) = integral x_i psi_alpha dnu
(or dV/dx_i psi_alpha against a reference measure e^{-V}).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import structlog

from config.settings import GalerkinSettings, IntegrationSettings
from core.data_models import ReferenceMode
from core.exceptions import CenteringError, DivergentIntegralError
from galerkin.basis import PolyBasis, weighted_gram
from measures.spec import MeasureSpec
from quadrature.integration import NodeSet, weighted_nodes

logger = structlog.get_logger(__name__)


@dataclass
class StiffnessSystem:
    """Symmetric system A c = b on the vector basis."""
    A: np.ndarray
    b: np.ndarray
    cond_estimate: float
    basis: PolyBasis
    mode: ReferenceMode
    second_moment: float
    stiffness_scalar: np.ndarray
    measure: str = ""
    standard_error: float = 0.0

    @property
    def size(self) -> int:
        return self.b.size


def rhs_field(spec: MeasureSpec, x: np.ndarray, mode: ReferenceMode,
              reference: Optional[MeasureSpec] = None) -> np.ndarray:
    """x itself, or the gradient of the reference potential V (the measure's own by default)."""
    if ReferenceMode(mode) == ReferenceMode.POTENTIAL:
        return (reference or spec).grad_potential(x)
    return x


def _check_rhs(spec: MeasureSpec, nodes: NodeSet, field: np.ndarray, mode: ReferenceMode,
               tol: float) -> None:
    mean = nodes.integrate(field) / float(np.sum(nodes.weights))
    if nodes.monte_carlo:
        tol += 5.0 * max(nodes.standard_error(field[:, i]) for i in range(field.shape[1]))
    if np.max(np.abs(mean)) > tol:
        if ReferenceMode(mode) == ReferenceMode.POTENTIAL:
            raise CenteringError(
                f"Reference potential gradient of {spec.name} must integrate to 0 (got {mean.tolist()})"
            )
        raise CenteringError(
            f"Stein kernels require a centered measure; {spec.name} has mean {mean.tolist()}"
        )
    if ReferenceMode(mode) == ReferenceMode.POTENTIAL:
        energy = float(nodes.integrate(np.sum(field ** 2, axis=1)))
        if not math.isfinite(energy):
            raise DivergentIntegralError(f"Potential gradient of {spec.name} is not square-integrable")


def assemble(spec: MeasureSpec, basis: PolyBasis, mode: ReferenceMode = ReferenceMode.GAUSSIAN,
             cfg: Optional[IntegrationSettings] = None, settings: Optional[GalerkinSettings] = None,
             nodes: Optional[NodeSet] = None, reference: Optional[MeasureSpec] = None) -> StiffnessSystem:
    """Assemble the weak problem of ``spec`` on ``basis``.

    In potential mode the right-hand side is grad V of ``reference`` (``spec``
    itself when omitted).

    Raises:
        CenteringError: the measure (or the potential gradient) is not centered
    """
    settings = settings or GalerkinSettings()
    mode = ReferenceMode(mode)
    nodes = nodes or weighted_nodes(spec, cfg)
    x = nodes.points
    d = spec.dim

    field = rhs_field(spec, x, mode, reference)
    _check_rhs(spec, nodes, field, mode, settings.centering_tol)

    grads = basis.gradients(x)
    stiffness = sum(weighted_gram(nodes, grads[:, :, j]) for j in range(d))
    stiffness = 0.5 * (stiffness + stiffness.T)
    A = np.kron(np.eye(d), stiffness)
    psi = basis.values(x)
    b = weighted_gram(nodes, psi, field).T.ravel()

    eig = np.linalg.eigvalsh(stiffness)
    cond = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
    second_moment = float(nodes.integrate(np.sum(x ** 2, axis=1)))
    standard_error = nodes.standard_error(np.sum(x ** 2, axis=1))
    logger.debug("system_assembled", measure=spec.name, degree=basis.max_degree, size=A.shape[0],
                 cond=cond, mode=mode.value)
    return StiffnessSystem(
        A=A,
        b=b,
        cond_estimate=cond,
        basis=basis,
        mode=mode,
        second_moment=second_moment,
        stiffness_scalar=stiffness,
        measure=spec.name,
        standard_error=standard_error,
    )
