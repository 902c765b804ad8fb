"""
Propagation of a Stein kernel along normalized sums.

If tau_m is a kernel for S_m and S_n is built from n/m independent blocks of
size m, then E[mean over blocks of tau_m(S_m^(b)) | S_n] is a kernel for S_n.
The conditional expectation is estimated by k-nearest-neighbour regression
with k = ceil(sqrt(N)), locally linear by default.
"""

import math
from typing import Optional

import numpy as np
import structlog
from scipy.spatial import cKDTree

from config.settings import CLTSettings
from core.data_models import KernelSource
from core.exceptions import InsufficientSamplesError
from kernel1d.field import KernelField
from measures.sampling import sample
from measures.spec import MeasureSpec

logger = structlog.get_logger(__name__)

QUERY_CHUNK = 4096
LOCAL_RIDGE = 1e-10


def draw_batches(spec: MeasureSpec, n: int, N: int, seed: int = 0) -> np.ndarray:
    """N independent rows of n i.i.d. draws, shape (N, n, d)."""
    draws = sample(spec, N * n, seed)
    return draws.reshape(N, n, spec.dim)


def normalized_sums(batches: np.ndarray, count: Optional[int] = None) -> np.ndarray:
    """(X_1 + ... + X_count) / sqrt(count) for every row."""
    count = batches.shape[1] if count is None else count
    return batches[:, :count, :].sum(axis=1) / math.sqrt(count)


class PropagatedKernel(KernelField):
    """Nearest-neighbour regression of kernel values on sample points."""

    def __init__(self, points: np.ndarray, targets: np.ndarray, k: int, local_linear: bool = True):
        points = np.asarray(points, dtype=float)
        super().__init__(points.shape[1], KernelSource.PROPAGATED)
        self.sample_points = points
        self.targets = np.asarray(targets, dtype=float)
        self.k = k
        self.local_linear = local_linear
        self._tree = cKDTree(points)

    def _fit(self, x: np.ndarray) -> np.ndarray:
        _, idx = self._tree.query(x, k=self.k)
        idx = idx.reshape(x.shape[0], self.k)
        y = self.targets[idx].reshape(x.shape[0], self.k, -1)
        if not self.local_linear:
            return y.mean(axis=1)
        offsets = self.sample_points[idx] - x[:, None, :]
        design = np.concatenate([np.ones(offsets.shape[:2] + (1,)), offsets], axis=2)
        gram = np.einsum('qkc,qke->qce', design, design)
        gram += LOCAL_RIDGE * np.eye(self.dim + 1) * np.trace(gram, axis1=1, axis2=2)[:, None, None]
        rhs = np.einsum('qkc,qkt->qct', design, y)
        coef = np.linalg.solve(gram, rhs)
        return coef[:, 0, :]

    def matrix(self, x: np.ndarray) -> np.ndarray:
        x = self.points(x)
        out = np.empty((x.shape[0], self.dim * self.dim))
        for start in range(0, x.shape[0], QUERY_CHUNK):
            out[start:start + QUERY_CHUNK] = self._fit(x[start:start + QUERY_CHUNK])
        return out.reshape(x.shape[0], self.dim, self.dim)


def propagate_kernel(tau_m: KernelField, batches: np.ndarray, n: int, m: int,
                     settings: Optional[CLTSettings] = None) -> PropagatedKernel:
    """Kernel for S_n from a kernel for S_m using the rows of ``batches``.

    Raises:
        InsufficientSamplesError: fewer rows than ``min_propagation_samples``
        ValueError: m does not divide n or the batches are too short
    """
    settings = settings or CLTSettings()
    batches = np.asarray(batches, dtype=float)
    N = batches.shape[0]
    if N < settings.min_propagation_samples:
        raise InsufficientSamplesError(
            f"Kernel propagation needs at least {settings.min_propagation_samples} samples, got {N}"
        )
    if not 1 <= m <= n or n % m:
        raise ValueError(f"Propagation needs m to divide n, got m={m}, n={n}")
    if batches.shape[1] < n:
        raise ValueError(f"Batches hold {batches.shape[1]} draws per row, need {n}")

    s_n = normalized_sums(batches, n)
    blocks = n // m
    targets = np.zeros((N, tau_m.dim, tau_m.dim))
    for b in range(blocks):
        s_m = batches[:, b * m:(b + 1) * m, :].sum(axis=1) / math.sqrt(m)
        targets += tau_m.matrix(s_m)
    targets /= blocks

    k = int(math.ceil(math.sqrt(N)))
    logger.info("kernel_propagated", m=m, n=n, samples=N, neighbours=k, blocks=blocks)
    return PropagatedKernel(s_n, targets.reshape(N, -1), k, settings.local_linear)


def empirical_discrepancy(tau: KernelField, points: np.ndarray) -> float:
    """Mean of ||tau(x) - Id||_HS^2 over sample points."""
    deviation = tau.deviation_from_identity(points)
    return float(np.mean(deviation))
