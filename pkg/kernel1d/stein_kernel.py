"""
Closed-form one-dimensional Stein kernels and their discrepancy.

For a centered density p with connected support the kernel is unique:
tau(x) = (1 / p(x)) * integral_x^inf y p(y) dy.
"""

from typing import Optional

import numpy as np
import structlog
from scipy.integrate import cumulative_simpson

from config.settings import KernelSettings
from core.data_models import DiscrepancyReport, KernelSource
from core.exceptions import CenteringError, GridMismatchError, KernelUndefinedError
from kernel1d.density import GridDensity1D
from kernel1d.field import TabulatedKernel1D

logger = structlog.get_logger(__name__)


def _tail_integral(p: GridDensity1D, mean: float) -> np.ndarray:
    """integral_x^inf (y - mean) p(y) dy at every node.

    Right of the origin the sum runs from the right end; left of it the
    centering identity turns the tail into minus the left cumulative sum, so
    no node pays for cancellation against the total.
    """
    f = (p.x - mean) * p.values
    h = p.h
    right = cumulative_simpson(f[::-1], dx=h, initial=0.0)[::-1]
    left = cumulative_simpson(f, dx=h, initial=0.0)
    return np.where(p.x >= mean, right, -left)


def _extrapolate(values: np.ndarray, first: int, last: int) -> np.ndarray:
    out = values.copy()
    n = out.size
    if first > 0:
        slope = out[first + 1] - out[first] if first + 1 <= last else 0.0
        out[:first] = out[first] + slope * (np.arange(first) - first)
    if last < n - 1:
        slope = out[last] - out[last - 1] if last - 1 >= first else 0.0
        out[last + 1:] = out[last] + slope * (np.arange(last + 1, n) - last)
    return out


def closed_form_kernel(p: GridDensity1D, settings: Optional[KernelSettings] = None) -> TabulatedKernel1D:
    """Exact Stein kernel of a centered one-dimensional grid density.

    Raises:
        CenteringError: the density mean exceeds the centering tolerance
        KernelUndefinedError: the density vanishes inside its support
    """
    settings = settings or KernelSettings()
    p.require_normalized()
    mean = p.mean()
    if abs(mean) > settings.centering_tol:
        raise CenteringError(
            f"Stein kernels exist only for centered measures; {p.name or 'density'} has mean {mean:.3g}"
        )

    active = p.values > settings.density_cutoff * float(np.max(p.values))
    idx = np.flatnonzero(active)
    first, last = int(idx[0]), int(idx[-1])
    if not np.all(active[first:last + 1]):
        gap = first + int(np.argmin(active[first:last + 1]))
        raise KernelUndefinedError(
            f"Density {p.name} vanishes at x={p.x[gap]:.6g} inside its support; no Stein kernel exists"
        )
    if last - first < 2:
        raise KernelUndefinedError(f"Density {p.name} is supported on fewer than three grid nodes")

    tail = _tail_integral(p, mean)
    tau = np.zeros_like(p.values)
    tau[first:last + 1] = tail[first:last + 1] / p.values[first:last + 1]
    tau = _extrapolate(tau, first, last)
    tau = np.clip(tau, 0.0, None)
    logger.debug("closed_form_kernel", density=p.name, excluded_nodes=int(p.grid.m - (last - first + 1)))
    return TabulatedKernel1D(p.grid, tau, KernelSource.CLOSED_FORM)


def discrepancy_1d(tau: TabulatedKernel1D, p: GridDensity1D, cp: Optional[float] = None,
                   with_residual: bool = True) -> DiscrepancyReport:
    """Stein discrepancy integral (tau - 1)^2 dp of a tabulated kernel.

    With ``cp`` the report carries the bound (Cp - 2) E[x^2] + 1.
    """
    if not tau.grid.same_as(p.grid):
        raise GridMismatchError(
            f"Kernel grid [{tau.grid.lo}, {tau.grid.hi}] x {tau.grid.m} does not match density grid "
            f"[{p.grid.lo}, {p.grid.hi}] x {p.grid.m}"
        )
    s_squared = p.expect((tau.values - 1.0) ** 2)
    second = p.expect(tau.values ** 2)
    bound = None
    if cp is not None:
        bound = (cp - 2.0) * p.moment(2) + 1.0
    residual = 0.0
    if with_residual:
        from kernel1d.residual import weak_residual
        residual = weak_residual(tau, p)
    return DiscrepancyReport(
        s_squared=s_squared,
        second_moment_tau=second,
        bound_value=bound,
        bound_name="(Cp-2)E|x|^2+d" if bound is not None else "",
        residual_max=residual,
    )
