"""
Galerkin solution of the weak problem, its kernel field and discrepancy.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import structlog
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from config.settings import GalerkinSettings, IntegrationSettings
from core.data_models import DiscrepancyReport, KernelSource, ReferenceMode
from core.exceptions import SolverError
from galerkin.assembly import StiffnessSystem, assemble, rhs_field
from galerkin.basis import PolyBasis, build_basis
from kernel1d.field import KernelField
from kernel1d.residual import default_test_bank, weak_residual
from measures.spec import MeasureSpec
from quadrature.integration import NodeSet, weighted_nodes

logger = structlog.get_logger(__name__)


@dataclass
class GalerkinSolution:
    """Coefficients of g = sum c_(i, alpha) e_i psi_alpha and its energy."""
    basis: PolyBasis
    coeffs: np.ndarray
    energy: float
    j_value: float
    mode: ReferenceMode
    regularized: bool = False
    residual: float = 0.0
    second_moment: float = 0.0
    cond_estimate: float = 1.0

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def degree(self) -> int:
        return self.basis.max_degree

    def coefficient_matrix(self) -> np.ndarray:
        """Coefficients as (d, K): row i holds the expansion of g_i."""
        return np.asarray(self.coeffs, dtype=float).reshape(self.dim, self.basis.size)

    def to_dict(self) -> Dict[str, Any]:
        data = self.basis.to_dict()
        data.update({
            "coeffs": np.asarray(self.coeffs, dtype=float).tolist(),
            "energy": self.energy,
            "j_value": self.j_value,
            "mode": ReferenceMode(self.mode).value,
            "regularized_flag": self.regularized,
            "residual": self.residual,
            "second_moment": self.second_moment,
        })
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GalerkinSolution":
        return cls(
            basis=PolyBasis.from_dict(data),
            coeffs=np.asarray(data["coeffs"], dtype=float),
            energy=float(data["energy"]),
            j_value=float(data.get("j_value", -0.5 * float(data["energy"]))),
            mode=ReferenceMode(data.get("mode", ReferenceMode.GAUSSIAN.value)),
            regularized=bool(data.get("regularized_flag", False)),
            residual=float(data.get("residual", 0.0)),
            second_moment=float(data.get("second_moment", 0.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "GalerkinSolution":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GalerkinSolution":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


class GalerkinKernel(KernelField):
    """tau = Jacobian of the Galerkin solution g."""

    def __init__(self, solution: GalerkinSolution):
        super().__init__(solution.dim, KernelSource.GALERKIN)
        self.solution = solution
        self._coeffs = solution.coefficient_matrix()

    def matrix(self, x: np.ndarray) -> np.ndarray:
        grads = self.solution.basis.gradients(self.points(x))
        return np.einsum('ik,nkj->nij', self._coeffs, grads)

    def potential(self, x: np.ndarray) -> np.ndarray:
        """The vector field g itself (n, d)."""
        return self.solution.basis.values(self.points(x)) @ self._coeffs.T


def solve(system: StiffnessSystem, settings: Optional[GalerkinSettings] = None) -> GalerkinSolution:
    """Solve A c = b by Cholesky, with a flagged ridge on near-singular systems.

    Raises:
        SolverError: the system stays singular after regularization
    """
    settings = settings or GalerkinSettings()
    A, b = system.A, system.b
    K = b.size
    regularized = False
    factor = None
    if system.cond_estimate < settings.max_condition:
        try:
            factor = cho_factor(A, lower=True)
        except LinAlgError:
            factor = None
    if factor is None:
        ridge = settings.ridge_factor * float(np.trace(A)) / K
        logger.warning("ridge_regularization", measure=system.measure, degree=system.basis.max_degree,
                       cond=system.cond_estimate, ridge=ridge)
        try:
            factor = cho_factor(A + ridge * np.eye(K), lower=True)
        except LinAlgError as e:
            raise SolverError(f"Galerkin system for {system.measure} is singular even with ridge {ridge:.3g}: {e}")
        regularized = True

    coeffs = cho_solve(factor, b)
    norm_b = float(np.linalg.norm(b))
    residual = float(np.linalg.norm(A @ coeffs - b) / norm_b) if norm_b > 0 else 0.0
    if not np.all(np.isfinite(coeffs)):
        raise SolverError(f"Galerkin solve for {system.measure} produced non-finite coefficients")
    if residual > settings.residual_tol and not regularized:
        logger.warning("solve_residual_high", measure=system.measure, residual=residual)
    energy = float(b @ coeffs)
    return GalerkinSolution(
        basis=system.basis,
        coeffs=coeffs,
        energy=energy,
        j_value=-0.5 * energy,
        mode=system.mode,
        regularized=regularized,
        residual=residual,
        second_moment=system.second_moment,
        cond_estimate=system.cond_estimate,
    )


def kernel_field(solution: GalerkinSolution) -> GalerkinKernel:
    """Kernel field tau = grad g of a Galerkin solution."""
    return GalerkinKernel(solution)


def in_span_residual(solution: GalerkinSolution, nodes: NodeSet, field: np.ndarray) -> float:
    """Weak residual over the test fields e_i psi_alpha of the solution basis."""
    x = nodes.points
    psi = solution.basis.values(x)
    grads = solution.basis.gradients(x)
    tau = np.einsum('ik,nkj->nij', solution.coefficient_matrix(), grads)
    lhs = psi.T @ (field * nodes.weights[:, None])
    pairing = np.einsum('n,nkj,nij->ki', nodes.weights, grads, tau)
    norms = nodes.integrate(psi ** 2 + np.sum(grads ** 2, axis=2))
    r = np.abs(lhs - pairing) / (1.0 + np.sqrt(norms))[:, None]
    if not np.all(np.isfinite(r)):
        raise SolverError("In-span residual of the Galerkin solution is not finite")
    return float(np.max(r))


def discrepancy_estimate(solution: GalerkinSolution, spec: MeasureSpec,
                         cfg: Optional[IntegrationSettings] = None, nodes: Optional[NodeSet] = None,
                         cp: Optional[float] = None, probe: bool = True,
                         reference: Optional[MeasureSpec] = None) -> DiscrepancyReport:
    """Discrepancy of the gradient-form kernel on the solution subspace.

    s^2 = energy - 2 E<b, x> + d where b is x (Gaussian mode) or grad V of the
    reference. In Gaussian mode a Poincare constant gives the bound
    (Cp - 2) E|x|^2 + d.
    """
    if solution.basis.size == 0:
        raise SolverError("Discrepancy estimate needs a basis containing the linear functions")
    nodes = nodes or weighted_nodes(spec, cfg)
    d = solution.dim
    mode = ReferenceMode(solution.mode)

    def rhs(x: np.ndarray) -> np.ndarray:
        return rhs_field(spec, x, mode, reference)

    x = nodes.points
    second = float(nodes.integrate(np.sum(x ** 2, axis=1)))
    pairing = float(nodes.integrate(np.sum(rhs(x) * x, axis=1)))
    s_squared = solution.energy - 2.0 * pairing + d
    cp = spec.known_poincare if cp is None else cp
    bound = None
    if cp is not None and mode == ReferenceMode.GAUSSIAN:
        bound = (cp - 2.0) * second + d

    tau = kernel_field(solution)

    in_span = in_span_residual(solution, nodes, rhs(nodes.points))
    out_of_span = None
    if probe:
        bank = [phi for phi in default_test_bank(d)
                if phi.degree is None or phi.degree > solution.degree]
        bank = [phi for phi in bank if phi.degree is None or 2 * phi.degree < (spec.moment_budget or math.inf)]
        out_of_span = weak_residual(tau, nodes, bank, rhs=rhs) if bank else 0.0

    return DiscrepancyReport(
        s_squared=s_squared,
        second_moment_tau=_second_moment_tau(tau, nodes),
        bound_value=bound,
        bound_name="(Cp-2)E|x|^2+d" if bound is not None else "",
        residual_max=in_span,
        out_of_span_residual=out_of_span,
        regularized=solution.regularized,
        degree=solution.degree,
    )


def _second_moment_tau(tau: GalerkinKernel, nodes: NodeSet) -> float:
    m = tau.matrix(nodes.points)
    return float(nodes.integrate(np.sum(m ** 2, axis=(1, 2))))


@dataclass
class DegreeResult:
    """One rung of a Galerkin degree sweep."""
    degree: int
    system: StiffnessSystem
    solution: GalerkinSolution
    report: DiscrepancyReport


def run_degrees(spec: MeasureSpec, degrees: Sequence[int], mode: ReferenceMode = ReferenceMode.GAUSSIAN,
                cfg: Optional[IntegrationSettings] = None, settings: Optional[GalerkinSettings] = None,
                cp: Optional[float] = None, probe: bool = True,
                reference: Optional[MeasureSpec] = None) -> List[DegreeResult]:
    """Build, assemble, solve and evaluate for every degree, sharing one node set."""
    settings = settings or GalerkinSettings()
    nodes = weighted_nodes(spec, cfg)
    results = []
    for N in sorted(degrees):
        basis = build_basis(spec, N, cfg, nodes=nodes)
        system = assemble(spec, basis, mode, cfg, settings, nodes=nodes, reference=reference)
        solution = solve(system, settings)
        report = discrepancy_estimate(solution, spec, cfg, nodes=nodes, cp=cp, probe=probe,
                                      reference=reference)
        logger.info("galerkin_degree_done", measure=spec.name, degree=N, energy=solution.energy,
                    s_squared=report.s_squared, regularized=solution.regularized)
        results.append(DegreeResult(N, system, solution, report))
    return results
