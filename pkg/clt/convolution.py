"""
Laws of normalized sums by density convolution on uniform grids.

Every input density is turned into point masses on a lattice (trapezoid
weights times density), the lattice masses of the sum come from one
zero-padded real FFT, and the result is rescaled by 1/sqrt(n) and
interpolated back onto a grid of the input's size.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import structlog
from scipy.fft import irfft, next_fast_len, rfft
from scipy.interpolate import CubicSpline
from scipy.signal import fftconvolve
from scipy.stats import norm

from config.settings import CLTSettings
from core.exceptions import AliasingError, IsotropyError, NormalizationError
from kernel1d.density import GridDensity1D
from quadrature.grid import Grid1D

logger = structlog.get_logger(__name__)

ALIASING_TOL = 1e-8
DRIFT_TOL = 1e-8
NOISE_FLOOR = 1e-14
ISOTROPY_TOL = 1e-6
GAUSSIAN_WIDTH = 12.0
STANDARDIZE_SLACK = 1e-10


@dataclass(frozen=True)
class SmoothedLaw:
    """Law of sqrt(t) S + sqrt(1 - t) Z for a base law S."""
    base: GridDensity1D
    t: float
    density: GridDensity1D

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise ValueError(f"Smoothing parameter t must lie in (0, 1), got {self.t}")


def require_standardized(p: GridDensity1D, tol: float = ISOTROPY_TOL) -> None:
    """Mean 0 and variance 1 within ``tol``.

    Raises:
        IsotropyError: the density is not standardized
    """
    p.require_normalized()
    mean, var = p.mean(), p.variance()
    if abs(mean) > tol or abs(var - 1.0) > tol:
        raise IsotropyError(
            f"Convolution needs a centered unit-variance density; {p.name} has mean {mean:.3g}, variance {var:.8g}"
        )


def _standardize(p: GridDensity1D) -> GridDensity1D:
    """Remove round-off drift in mean and variance by an affine change of variable."""
    mean = p.mean()
    std = math.sqrt(p.variance())
    if abs(mean) <= STANDARDIZE_SLACK and abs(std - 1.0) <= STANDARDIZE_SLACK:
        return p
    # density of (X - mean) / std on the mapped nodes is std * p
    grid = Grid1D((p.grid.lo - mean) / std, (p.grid.hi - mean) / std, p.grid.m)
    kinks = tuple((k - mean) / std for k in p.kinks)
    out = GridDensity1D.from_values(grid, std * p.values, kinks=kinks, name=p.name)
    if abs(out.mean()) > DRIFT_TOL:
        raise NormalizationError(f"Centering drift {out.mean():.3g} of {p.name} exceeds {DRIFT_TOL}")
    return out


def _to_grid(start: float, spacing: float, density: np.ndarray, m: int, name: str,
             standardize: bool = True) -> GridDensity1D:
    """Interpolate lattice density values onto an m-node grid over their live range."""
    density = np.asarray(density, dtype=float)
    peak = float(np.max(density))
    density = np.where(density > NOISE_FLOOR * peak, density, 0.0)
    live = np.flatnonzero(density)
    first = max(int(live[0]) - 1, 0)
    last = min(int(live[-1]) + 1, density.size - 1)
    t = start + spacing * np.arange(first, last + 1)
    values = density[first:last + 1]
    grid = Grid1D(float(t[0]), float(t[-1]), m)
    spline = CubicSpline(t, values)
    out = np.clip(spline(grid.nodes), 0.0, None)
    result = GridDensity1D.from_values(grid, out, name=name)
    return _standardize(result) if standardize else result


def _check_aliasing(raw: np.ndarray, length: int, name: str) -> None:
    if raw.size > length:
        spill = float(np.max(np.abs(raw[length:])))
        if spill > ALIASING_TOL * float(np.max(np.abs(raw[:length]))):
            raise AliasingError(f"Convolution of {name} wraps around the FFT buffer (spill {spill:.3g})")


def convolve_iid_1d(p: GridDensity1D, n: int, settings: Optional[CLTSettings] = None) -> GridDensity1D:
    """Density of (X_1 + ... + X_n) / sqrt(n) for i.i.d. X_i ~ p.

    Raises:
        IsotropyError: ``p`` is not centered with unit variance
        AliasingError: the FFT buffer wraps around
    """
    settings = settings or CLTSettings()
    if not 1 <= n <= settings.max_n:
        raise ValueError(f"Convolution index must lie in [1, {settings.max_n}], got {n}")
    require_standardized(p)
    if n == 1:
        return p

    masses = p.lattice_masses()
    length = n * (p.grid.m - 1) + 1
    size = next_fast_len(length, real=True)
    spectrum = rfft(masses, size) ** n
    raw = irfft(spectrum, size)
    _check_aliasing(raw, length, p.name)
    lattice = np.clip(raw[:length], 0.0, None)

    # sum lives on n*lo + k*h; divide by sqrt(n): spacing h/sqrt(n), density sqrt(n)*mass/h
    root = math.sqrt(n)
    start = n * p.grid.lo / root
    spacing = p.h / root
    density = lattice / spacing
    out = _to_grid(start, spacing, density, p.grid.m, f"{p.name}*{n}")
    logger.debug("convolved", density=p.name, n=n, grid=[out.grid.lo, out.grid.hi], fft_size=size)
    return out


def _resample_to_spacing(p: GridDensity1D, h: float) -> np.ndarray:
    m = int(math.ceil((p.grid.hi - p.grid.lo) / h)) + 1
    x = p.grid.lo + h * np.arange(m)
    values = p.pdf(x)
    w = np.full(m, h)
    w[0] = w[-1] = 0.5 * h
    masses = w * values
    return masses / np.sum(masses)


def convolve_mixed_1d(densities: Sequence[GridDensity1D], settings: Optional[CLTSettings] = None) -> GridDensity1D:
    """Density of (X_1 + ... + X_n) / sqrt(n) for independent X_i with the given densities."""
    settings = settings or CLTSettings()
    densities = list(densities)
    n = len(densities)
    if not 1 <= n <= settings.max_n:
        raise ValueError(f"Number of summands must lie in [1, {settings.max_n}], got {n}")
    for p in densities:
        require_standardized(p)
    if n == 1:
        return densities[0]

    h = min(p.h for p in densities)
    lattices: List[np.ndarray] = [_resample_to_spacing(p, h) for p in densities]
    length = sum(q.size - 1 for q in lattices) + 1
    size = next_fast_len(length, real=True)
    spectrum = np.ones(size // 2 + 1, dtype=complex)
    for q in lattices:
        spectrum *= rfft(q, size)
    raw = irfft(spectrum, size)
    name = "+".join(p.name for p in densities)
    _check_aliasing(raw, length, name)
    lattice = np.clip(raw[:length], 0.0, None)

    root = math.sqrt(n)
    start = sum(p.grid.lo for p in densities) / root
    spacing = h / root
    m = max(p.grid.m for p in densities)
    return _to_grid(start, spacing, lattice / spacing, m, f"mixed({name})")


def smooth_with_gaussian(p: GridDensity1D, t: float) -> SmoothedLaw:
    """Law of sqrt(t) S + sqrt(1 - t) Z with S ~ p and Z standard normal, independent."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"Smoothing parameter t must lie in (0, 1), got {t}")
    root_t = math.sqrt(t)
    sigma = math.sqrt(1.0 - t)
    spacing = root_t * p.h
    masses = p.lattice_masses()
    reach = int(math.ceil(GAUSSIAN_WIDTH * sigma / spacing))
    offsets = spacing * np.arange(-reach, reach + 1)
    kernel = norm.pdf(offsets, scale=sigma)
    kernel /= np.sum(kernel)
    lattice = np.clip(fftconvolve(masses, kernel), 0.0, None)
    start = root_t * p.grid.lo - reach * spacing
    density = _to_grid(start, spacing, lattice / spacing, p.grid.m, f"{p.name}~t={t:g}")
    return SmoothedLaw(base=p, t=t, density=density)
