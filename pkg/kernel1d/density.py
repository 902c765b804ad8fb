"""
Normalized densities tabulated on uniform one-dimensional grids.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from config.settings import KernelSettings
from core.exceptions import NormalizationError
from measures.spec import MeasureSpec
from quadrature.grid import Grid1D
from quadrature.integration import truncate_support

NORMALIZATION_TOL = 1e-8
HEAVY_TAIL_MASS_TOL = 1e-8


def simpson_weights(m: int, h: float) -> np.ndarray:
    """Composite Simpson weights on m equispaced nodes; an even count closes with a trapezoid cell."""
    w = np.zeros(m)
    odd = m if m % 2 else m - 1
    if odd >= 3:
        w[:odd] = 2.0
        w[1:odd:2] = 4.0
        w[0] = w[odd - 1] = 1.0
        w[:odd] *= h / 3.0
    if odd != m:
        w[-2] += 0.5 * h
        w[-1] += 0.5 * h
    return w


@dataclass(frozen=True)
class GridDensity1D:
    """Density values on a Grid1D with their cumulative distribution."""
    grid: Grid1D
    values: np.ndarray
    cdf: np.ndarray
    normalized: bool = True
    kinks: Tuple[float, ...] = ()
    name: str = ""

    @classmethod
    def from_values(cls, grid: Grid1D, values: np.ndarray, normalize: bool = True,
                    kinks: Tuple[float, ...] = (), name: str = "") -> "GridDensity1D":
        values = np.asarray(values, dtype=float).copy()
        if values.shape != (grid.m,):
            raise ValueError(f"Density values must have shape ({grid.m},), got {values.shape}")
        if np.any(~np.isfinite(values)):
            raise NormalizationError("Density values must be finite")
        peak = float(np.max(np.abs(values))) if values.size else 0.0
        if np.min(values) < -1e-12 * max(peak, 1e-300):
            raise NormalizationError(f"Density has negative values (min {np.min(values):.3g})")
        values = np.clip(values, 0.0, None)
        mass = simpson(values, x=grid.nodes)
        if not mass > 0:
            raise NormalizationError(f"Density {name} has zero mass on [{grid.lo}, {grid.hi}]")
        if normalize:
            values = values / mass
        cdf = np.maximum.accumulate(cumulative_simpson(values, x=grid.nodes, initial=0.0))
        if normalize:
            cdf = np.minimum(cdf / cdf[-1], 1.0)
        values.setflags(write=False)
        cdf.setflags(write=False)
        return cls(grid=grid, values=values, cdf=cdf, normalized=normalize, kinks=tuple(kinks), name=name)

    @classmethod
    def from_spec(cls, spec: MeasureSpec, settings: Optional[KernelSettings] = None,
                  nodes: Optional[int] = None, mass_tol: Optional[float] = None) -> "GridDensity1D":
        """Tabulate a one-dimensional measure on its truncated support."""
        settings = settings or KernelSettings()
        if spec.dim != 1:
            raise ValueError(f"Grid densities are one-dimensional, got d={spec.dim}")
        tol = settings.mass_tol if mass_tol is None else mass_tol
        if spec.moment_budget is None or math.isfinite(spec.moment_budget):
            tol = max(tol, HEAVY_TAIL_MASS_TOL)
        lo, hi = truncate_support(spec, tol)[0]
        grid = Grid1D(lo, hi, nodes or settings.grid_nodes)
        return cls.from_values(grid, spec.pdf(grid.nodes.reshape(-1, 1)),
                               kinks=spec.kinks_for_axis(0), name=spec.name)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def h(self) -> float:
        return self.grid.spacing

    def mass(self) -> float:
        return float(simpson(self.values, x=self.x))

    def expect(self, values: np.ndarray) -> float:
        """Simpson integral of ``values * p`` over the grid."""
        return float(simpson(np.asarray(values, dtype=float) * self.values, x=self.x))

    def mean(self) -> float:
        return self.expect(self.x)

    def moment(self, k: int) -> float:
        return self.expect(self.x ** k)

    def variance(self) -> float:
        m = self.mean()
        return self.expect((self.x - m) ** 2)

    def require_normalized(self) -> None:
        if abs(self.mass() - 1.0) > NORMALIZATION_TOL:
            raise NormalizationError(f"Grid density {self.name} has mass {self.mass():.12g}, expected 1")

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Linear interpolation of the density, zero outside the grid."""
        return np.interp(np.asarray(x, dtype=float), self.x, self.values, left=0.0, right=0.0)

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Generalized inverse of the piecewise-linear CDF."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        idx = np.searchsorted(self.cdf, u, side='left')
        idx = np.clip(idx, 1, self.grid.m - 1)
        c0, c1 = self.cdf[idx - 1], self.cdf[idx]
        x0 = self.x[idx - 1]
        with np.errstate(divide='ignore', invalid='ignore'):
            frac = np.where(c1 > c0, (u - c0) / (c1 - c0), 1.0)
        return x0 + np.clip(frac, 0.0, 1.0) * self.h

    def weights(self) -> np.ndarray:
        """Composite Simpson weights times density, for use as a NodeSet."""
        return simpson_weights(self.grid.m, self.h) * self.values

    def lattice_masses(self) -> np.ndarray:
        """Trapezoid point masses on the nodes."""
        w = np.full(self.grid.m, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w * self.values

    def resample(self, grid: Grid1D) -> "GridDensity1D":
        """Interpolate onto another grid and renormalize."""
        return GridDensity1D.from_values(grid, self.pdf(grid.nodes), kinks=self.kinks, name=self.name)
