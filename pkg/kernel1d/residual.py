"""
Weak-form residual of a kernel field.

For a test vector field phi the residual is
r(phi) = integral rhs . phi dnu - integral <tau, grad phi>_HS dnu,
with rhs(x) = x for Stein kernels and rhs = grad V against a reference
measure e^{-V}. The reported value is the maximum of |r| / (1 + ||phi||_W12)
over a bank of test fields, which makes it a correctness check for kernels
of any origin.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from config.settings import IntegrationSettings
from core.exceptions import DivergentIntegralError
from kernel1d.density import GridDensity1D
from kernel1d.field import KernelField
from measures.spec import MeasureSpec
from quadrature.integration import NodeSet, weighted_nodes

ScalarMap = Callable[[np.ndarray], np.ndarray]

DEFAULT_DEGREE = 6
DEFAULT_FREQUENCIES = (1.0, 2.0, 3.0)


@dataclass(frozen=True)
class TestFunction:
    """Vector test field e_i * f with its gradient and polynomial degree (None for waves)."""
    name: str
    axis: int
    f: ScalarMap
    grad: Callable[[np.ndarray], np.ndarray]
    degree: Optional[int] = None

    # keep pytest from collecting this class
    __test__ = False


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform weights on sample points (n, d)."""
    points: np.ndarray

    def nodes(self) -> NodeSet:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        return NodeSet(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]), monte_carlo=True)


def _monomial(alpha: Sequence[int]) -> TestFunction:
    alpha = tuple(int(a) for a in alpha)

    def f(x: np.ndarray) -> np.ndarray:
        return np.prod(x ** np.asarray(alpha), axis=1)

    def grad(x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for j, a in enumerate(alpha):
            if a == 0:
                continue
            lowered = list(alpha)
            lowered[j] -= 1
            out[:, j] = a * np.prod(x ** np.asarray(lowered), axis=1)
        return out

    return TestFunction(name="x^" + "".join(str(a) for a in alpha), axis=0, f=f, grad=grad,
                        degree=sum(alpha))


def _wave(axis: int, k: float, kind: str) -> TestFunction:
    trig, dtrig = (np.sin, np.cos) if kind == "sin" else (np.cos, lambda t: -np.sin(t))

    def f(x: np.ndarray) -> np.ndarray:
        return trig(k * x[:, axis])

    def grad(x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        out[:, axis] = k * dtrig(k * x[:, axis])
        return out

    return TestFunction(name=f"{kind}({k:g}x{axis + 1})", axis=0, f=f, grad=grad)


def default_test_bank(dim: int, degree: int = DEFAULT_DEGREE,
                      frequencies: Sequence[float] = DEFAULT_FREQUENCIES) -> List[TestFunction]:
    """Monomials up to total ``degree`` plus sine and cosine waves, in every output direction."""
    scalars: List[TestFunction] = []
    for alpha in itertools.product(range(degree + 1), repeat=dim):
        if sum(alpha) <= degree:
            scalars.append(_monomial(alpha))
    for axis in range(dim):
        for k in frequencies:
            scalars.append(_wave(axis, k, "sin"))
            scalars.append(_wave(axis, k, "cos"))
    bank = []
    for i in range(dim):
        for s in scalars:
            bank.append(TestFunction(name=f"e{i + 1}*{s.name}", axis=i, f=s.f, grad=s.grad, degree=s.degree))
    return bank


def _nodes_for(target: Union[MeasureSpec, GridDensity1D, EmpiricalMeasure, NodeSet],
               cfg: Optional[IntegrationSettings]) -> NodeSet:
    if isinstance(target, NodeSet):
        return target
    if isinstance(target, GridDensity1D):
        return NodeSet(target.x.reshape(-1, 1), target.weights())
    if isinstance(target, EmpiricalMeasure):
        return target.nodes()
    return weighted_nodes(target, cfg)


def _finite_degree(target, requested: int) -> int:
    """Largest polynomial degree whose residual terms are integrable."""
    budget = getattr(target, 'moment_budget', math.inf)
    if budget is None or not math.isfinite(budget):
        return requested
    # need |x| |phi| and phi^2 integrable: 2k < budget
    return max(0, min(requested, int(math.ceil(budget / 2.0)) - 1))


def weak_residual(tau: KernelField, target: Union[MeasureSpec, GridDensity1D, EmpiricalMeasure, NodeSet],
                  test_bank: Optional[Sequence[TestFunction]] = None,
                  rhs: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  cfg: Optional[IntegrationSettings] = None) -> float:
    """Maximum normalized weak residual of ``tau`` over a test bank.

    Raises:
        DivergentIntegralError: a test function is not square-integrable against the target
    """
    nodes = _nodes_for(target, cfg)
    x = nodes.points
    if test_bank is None:
        test_bank = default_test_bank(tau.dim, _finite_degree(target, DEFAULT_DEGREE))
    else:
        limit = _finite_degree(target, 10 ** 6)
        for phi in test_bank:
            if phi.degree is not None and phi.degree > limit:
                raise DivergentIntegralError(
                    f"Test function {phi.name} is not square-integrable against {getattr(target, 'name', 'target')}"
                )
    field_values = x if rhs is None else np.asarray(rhs(x), dtype=float).reshape(x.shape)
    tau_values = tau.matrix(x)

    worst = 0.0
    for phi in test_bank:
        f = phi.f(x)
        g = phi.grad(x)
        lhs = nodes.integrate(field_values[:, phi.axis] * f)
        pairing = nodes.integrate(np.einsum('nj,nj->n', tau_values[:, phi.axis, :], g))
        norm = math.sqrt(float(nodes.integrate(f ** 2 + np.sum(g ** 2, axis=1))))
        r = float(lhs - pairing)
        if not (math.isfinite(r) and math.isfinite(norm)):
            raise DivergentIntegralError(f"Residual for test function {phi.name} is not finite")
        worst = max(worst, abs(r) / (1.0 + norm))
    return worst
