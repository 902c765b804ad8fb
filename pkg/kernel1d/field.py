"""
Matrix-valued kernel fields x -> tau(x).
"""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from core.data_models import KernelSource
from quadrature.grid import Grid1D


class KernelField(ABC):
    """A map from points (n, d) to matrices (n, d, d)."""

    def __init__(self, dim: int, source: KernelSource):
        self.dim = dim
        self.source = KernelSource(source)

    @abstractmethod
    def matrix(self, x: np.ndarray) -> np.ndarray:
        """Kernel matrices at the points ``x`` (n, d)."""
        pass

    def points(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        return x

    def trace(self, x: np.ndarray) -> np.ndarray:
        return np.trace(self.matrix(x), axis1=1, axis2=2)

    def deviation_from_identity(self, x: np.ndarray) -> np.ndarray:
        """Squared Hilbert-Schmidt distance ||tau(x) - Id||^2 at each point."""
        diff = self.matrix(x) - np.eye(self.dim)
        return np.sum(diff ** 2, axis=(1, 2))


class ConstantKernel(KernelField):
    """tau(x) = C for a fixed matrix C (the identity by default)."""

    def __init__(self, dim: int = 1, value: Optional[np.ndarray] = None):
        super().__init__(dim, KernelSource.IDENTITY if value is None else KernelSource.CLOSED_FORM)
        self.value = np.eye(dim) if value is None else np.atleast_2d(np.asarray(value, dtype=float))
        if self.value.shape != (dim, dim):
            raise ValueError(f"Constant kernel must be {dim}x{dim}, got {self.value.shape}")

    def matrix(self, x: np.ndarray) -> np.ndarray:
        n = self.points(x).shape[0]
        return np.broadcast_to(self.value, (n, self.dim, self.dim)).copy()


class TabulatedKernel1D(KernelField):
    """One-dimensional kernel tabulated on a grid, linearly interpolated in between."""

    def __init__(self, grid: Grid1D, values: np.ndarray, source: KernelSource = KernelSource.CLOSED_FORM):
        super().__init__(1, source)
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.m,):
            raise ValueError(f"Kernel values must have shape ({grid.m},), got {values.shape}")
        self.grid = grid
        self.values = values

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float).ravel(), self.grid.nodes, self.values)

    def matrix(self, x: np.ndarray) -> np.ndarray:
        return self(self.points(x)[:, 0]).reshape(-1, 1, 1)
