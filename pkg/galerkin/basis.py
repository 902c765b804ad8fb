"""
Polynomial bases for the Galerkin weak problem.

Scalar basis functions are tensor probabilists' Hermite polynomials in the
standardized coordinates z = (x - mu) / s, normalized by sqrt(alpha!),
centered under nu and orthonormalized in L2(nu) through the inverse Cholesky
factor of their covariance Gram matrix. Constants are excluded.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from numpy.polynomial import hermite_e
from scipy.linalg import cholesky, solve_triangular

from config.settings import IntegrationSettings
from core.exceptions import IllConditionedBasisError
from measures.moments import require_moments
from measures.spec import MeasureSpec
from quadrature.integration import NodeSet, weighted_nodes

logger = structlog.get_logger(__name__)

MAX_GRAM_CONDITION = 1e12


def multi_indices(dim: int, max_degree: int) -> List[Tuple[int, ...]]:
    """Multi-indices with 1 <= |alpha| <= max_degree, graded by total degree."""
    out = [a for a in itertools.product(range(max_degree + 1), repeat=dim) if 1 <= sum(a) <= max_degree]
    return sorted(out, key=lambda a: (sum(a), tuple(-v for v in a)))


@dataclass
class PolyBasis:
    """Mean-zero, nu-orthonormal polynomial basis."""
    dim: int
    max_degree: int
    multi_indices: List[Tuple[int, ...]]
    center: np.ndarray
    scale: np.ndarray
    raw_means: np.ndarray
    gram_transform: np.ndarray
    orthonormalized: bool = True
    gram_condition: float = 1.0
    _norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        self.raw_means = np.asarray(self.raw_means, dtype=float)
        self.gram_transform = np.asarray(self.gram_transform, dtype=float)
        self.multi_indices = [tuple(int(v) for v in a) for a in self.multi_indices]
        self._norms = np.sqrt([float(math.factorial(k)) for k in range(self.max_degree + 1)])

    @property
    def size(self) -> int:
        """Number of scalar basis functions."""
        return len(self.multi_indices)

    def _axis_tables(self, x: np.ndarray):
        z = (np.atleast_2d(x) - self.center) / self.scale
        values = [hermite_e.hermevander(z[:, i], self.max_degree) / self._norms for i in range(self.dim)]
        # d/dz (He_k / sqrt(k!)) = sqrt(k) He_{k-1} / sqrt((k-1)!)
        derivs = []
        for v in values:
            d = np.zeros_like(v)
            d[:, 1:] = np.sqrt(np.arange(1, self.max_degree + 1)) * v[:, :-1]
            derivs.append(d)
        return values, derivs

    def raw_values(self, x: np.ndarray) -> np.ndarray:
        values, _ = self._axis_tables(x)
        out = np.ones((values[0].shape[0], self.size))
        for k, alpha in enumerate(self.multi_indices):
            for i, a in enumerate(alpha):
                if a:
                    out[:, k] *= values[i][:, a]
        return out

    def raw_gradients(self, x: np.ndarray) -> np.ndarray:
        values, derivs = self._axis_tables(x)
        n = values[0].shape[0]
        out = np.zeros((n, self.size, self.dim))
        for k, alpha in enumerate(self.multi_indices):
            for j in range(self.dim):
                if alpha[j] == 0:
                    continue
                g = derivs[j][:, alpha[j]] / self.scale[j]
                for i, a in enumerate(alpha):
                    if i != j and a:
                        g = g * values[i][:, a]
                out[:, k, j] = g
        return out

    def values(self, x: np.ndarray) -> np.ndarray:
        """Basis values (n, K)."""
        return (self.raw_values(x) - self.raw_means) @ self.gram_transform.T

    def gradients(self, x: np.ndarray) -> np.ndarray:
        """Basis gradients (n, K, d)."""
        return np.einsum('kl,nld->nkd', self.gram_transform, self.raw_gradients(x))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "degree": self.max_degree,
            "multi_indices": [list(a) for a in self.multi_indices],
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "raw_means": self.raw_means.tolist(),
            "gram_transform": self.gram_transform.tolist(),
            "orthonormalized": self.orthonormalized,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PolyBasis":
        return cls(
            dim=int(data["dim"]),
            max_degree=int(data["degree"]),
            multi_indices=[tuple(a) for a in data["multi_indices"]],
            center=np.asarray(data["center"]),
            scale=np.asarray(data["scale"]),
            raw_means=np.asarray(data["raw_means"]),
            gram_transform=np.asarray(data["gram_transform"]),
            orthonormalized=bool(data.get("orthonormalized", True)),
        )


def weighted_gram(nodes: NodeSet, a: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """Matrix of integrals a_k b_l against the node weights."""
    b = a if b is None else b
    return a.T @ (b * nodes.weights[:, None])


def build_basis(spec: MeasureSpec, N: int, cfg: Optional[IntegrationSettings] = None,
                nodes: Optional[NodeSet] = None) -> PolyBasis:
    """Orthonormalized Hermite basis of total degree <= N for ``spec``.

    Raises:
        MomentBudgetError: moments of order 2N are not finite
        IllConditionedBasisError: the Gram matrix condition exceeds 1e12
    """
    if N < 1:
        raise ValueError(f"Basis degree must be at least 1, got {N}")
    require_moments(spec, 2 * N)
    nodes = nodes or weighted_nodes(spec, cfg)
    x = nodes.points
    mass = float(np.sum(nodes.weights))
    center = nodes.integrate(x) / mass
    scale = np.sqrt(nodes.integrate((x - center) ** 2) / mass)
    scale = np.where(scale > 0, scale, 1.0)

    basis = PolyBasis(
        dim=spec.dim,
        max_degree=N,
        multi_indices=multi_indices(spec.dim, N),
        center=center,
        scale=scale,
        raw_means=np.zeros(len(multi_indices(spec.dim, N))),
        gram_transform=np.eye(len(multi_indices(spec.dim, N))),
        orthonormalized=False,
    )
    raw = basis.raw_values(x)
    means = nodes.integrate(raw) / mass
    centered = raw - means
    gram = weighted_gram(nodes, centered)
    gram = 0.5 * (gram + gram.T)
    eig = np.linalg.eigvalsh(gram)
    condition = float(eig[-1] / eig[0]) if eig[0] > 0 else math.inf
    if condition > MAX_GRAM_CONDITION:
        raise IllConditionedBasisError(
            f"Gram matrix of the degree-{N} basis for {spec.name} has condition {condition:.3g}; reduce N"
        )
    lower = cholesky(gram, lower=True)
    transform = solve_triangular(lower, np.eye(basis.size), lower=True)

    basis.raw_means = means
    basis.gram_transform = transform
    basis.orthonormalized = True
    basis.gram_condition = condition
    logger.debug("basis_built", measure=spec.name, degree=N, size=basis.size, gram_condition=condition)
    return basis
