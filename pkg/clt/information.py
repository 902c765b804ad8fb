"""
Relative entropy and relative Fisher information with respect to the standard Gaussian.
"""

import math
from typing import Optional, Tuple

import numpy as np
import structlog
from scipy.stats import norm

from config.settings import CLTSettings, KernelSettings
from core.data_models import ExperimentRecord
from core.exceptions import FisherConsistencyError, NormalizationError
from clt.convolution import convolve_iid_1d, smooth_with_gaussian
from kernel1d.density import GridDensity1D, simpson_weights
from measures.spec import MeasureSpec

logger = structlog.get_logger(__name__)

DENSITY_FLOOR = 1e-30
TRIMMED_MASS_TOL = 1e-8
FISHER_ABS_SLACK = 1e-8


def _live_range(p: GridDensity1D) -> Tuple[int, int, float]:
    """Index range where p is positive, and the Simpson mass of that slice."""
    live = p.values > DENSITY_FLOOR * float(np.max(p.values))
    idx = np.flatnonzero(live)
    first, last = int(idx[0]), int(idx[-1])
    if not np.all(live[first:last + 1]):
        raise NormalizationError(f"Density {p.name} vanishes inside its support; relative entropy is undefined")
    live_mass = float(np.dot(simpson_weights(last - first + 1, p.h), p.values[first:last + 1]))
    # Simpson panels straddle kinks differently on the slice; that error is O(h^2)
    trimmed = p.mass() - live_mass
    if abs(trimmed) > max(TRIMMED_MASS_TOL, p.h ** 2):
        raise NormalizationError(f"Trimming the zero part of {p.name} drops {trimmed:.3g} of the mass")
    return first, last, live_mass


def _fisher(x: np.ndarray, p: np.ndarray, h: float) -> float:
    score = np.gradient(np.log(p), h) + x
    return float(np.dot(simpson_weights(x.size, h), p * score ** 2))


def entropy_fisher(p: GridDensity1D, jump_at_boundary: bool = False,
                   tolerance: float = 0.05) -> Tuple[float, float]:
    """H(p | gamma) and I(p | gamma).

    ``jump_at_boundary`` marks densities that do not vanish where their
    support ends; their Fisher information is infinite.

    Raises:
        FisherConsistencyError: the log-derivative quadrature on spacings h and
            2h disagree by more than ``tolerance``
    """
    p.require_normalized()
    first, last, live_mass = _live_range(p)
    x = p.x[first:last + 1]
    values = p.values[first:last + 1] / live_mass
    log_ratio = np.log(values) - norm.logpdf(x)
    entropy = float(np.dot(simpson_weights(x.size, p.h), values * log_ratio))
    if jump_at_boundary:
        return entropy, math.inf

    fine = _fisher(x, values, p.h)
    coarse = _fisher(x[::2], values[::2], 2.0 * p.h)
    if abs(fine - coarse) > tolerance * abs(fine) + FISHER_ABS_SLACK:
        raise FisherConsistencyError(
            f"Fisher information of {p.name} is not resolved: {fine:.6g} on h, {coarse:.6g} on 2h"
        )
    return entropy, fine


def smoothed_fisher_check(spec: MeasureSpec, n: int, t: float, cp: Optional[float] = None,
                          settings: Optional[CLTSettings] = None,
                          kernel_settings: Optional[KernelSettings] = None,
                          base: Optional[GridDensity1D] = None) -> ExperimentRecord:
    """Record for I(nu_n^t | gamma) <= t^2 (Cp - 1) d / (n (1 - t))."""
    settings = settings or CLTSettings()
    if spec.dim != 1:
        raise ValueError(f"The smoothed Fisher check is one-dimensional, got d={spec.dim}")
    if not 0.0 < t < 1.0:
        raise ValueError(f"Smoothing parameter t must lie in (0, 1), got {t}")
    cp = spec.known_poincare if cp is None else cp
    if cp is None:
        raise ValueError(f"A Poincare constant is needed for the Fisher bound of {spec.name}")
    p = base if base is not None else GridDensity1D.from_spec(spec, kernel_settings)
    law = smooth_with_gaussian(convolve_iid_1d(p, n, settings), t)
    _, fisher = entropy_fisher(law.density, tolerance=settings.fisher_consistency_tol)
    bound = t * t * (cp - 1.0) * spec.dim / (n * (1.0 - t))
    record = ExperimentRecord.check("fisher", n, fisher, bound, tolerance=settings.bound_tol,
                                    measure=spec.name, metadata={"t": t, "cp": cp})
    logger.info("fisher_check", measure=spec.name, n=n, t=t, fisher=fisher, bound=bound, passed=record.passed)
    return record
