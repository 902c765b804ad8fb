"""
Moments and standardization of measures.
"""

import dataclasses
import math
from typing import Optional

import numpy as np
import structlog

from config.settings import IntegrationSettings
from core.data_models import MomentReport
from core.exceptions import DivergentMomentError, MomentBudgetError, SingularCovarianceError
from measures.spec import MeasureSpec, affine_transform

logger = structlog.get_logger(__name__)

SWEEP_TOLERANCES = (1e-8, 1e-10, 1e-12)
SWEEP_RTOL = 1e-4
ISOTROPY_TOL = 1e-12


def require_moments(spec: MeasureSpec, order: float) -> None:
    """Raise when ``spec`` has no finite moments of ``order``."""
    budget = spec.moment_budget
    if budget is not None and order >= budget:
        raise MomentBudgetError(
            f"{spec.name} has finite moments only below order {budget:g}; order {order:g} requested"
        )


def _second_moment(spec: MeasureSpec, cfg: IntegrationSettings) -> float:
    from quadrature.integration import weighted_nodes
    nodes = weighted_nodes(spec, cfg)
    return float(nodes.integrate(np.sum(nodes.points ** 2, axis=1)))


def _check_truncation_sweep(spec: MeasureSpec, cfg: IntegrationSettings) -> None:
    values = [_second_moment(spec, dataclasses.replace(cfg, mass_tol=tol)) for tol in SWEEP_TOLERANCES]
    for previous, current in zip(values, values[1:]):
        if not math.isfinite(current) or abs(current - previous) > SWEEP_RTOL * abs(current):
            raise DivergentMomentError(
                f"Second moment of {spec.name} does not stabilize under truncation: {values}"
            )


def moments(spec: MeasureSpec, cfg: Optional[IntegrationSettings] = None) -> MomentReport:
    """Mean, covariance and low-order moments of ``spec``.

    Tensor quadrature for d <= 3, seeded Monte Carlo above. Measures whose
    moment budget is unknown are first checked by a truncation sweep.
    """
    from quadrature.integration import integrate, weighted_nodes

    cfg = cfg or IntegrationSettings()
    budget = spec.moment_budget
    if budget is not None and budget <= 2:
        raise DivergentMomentError(f"{spec.name} has no finite second moment (budget {budget:g})")
    if budget is None:
        _check_truncation_sweep(spec, cfg)

    nodes = weighted_nodes(spec, cfg)
    x = nodes.points
    mean = nodes.integrate(x)
    raw = nodes.integrate(x[:, :, None] * x[:, None, :])
    cov = raw - np.outer(mean, mean)
    cov = 0.5 * (cov + cov.T)
    third = nodes.integrate(x ** 3) if budget is None or budget > 3 else np.full(spec.dim, np.nan)
    fourth = None
    if budget is None or budget > 4:
        fourth = float(nodes.integrate(np.sum(x ** 2, axis=1) ** 2))

    if nodes.monte_carlo:
        error = nodes.standard_error(np.sum(x ** 2, axis=1))
    else:
        error = integrate(lambda p: np.sum(p ** 2, axis=1), spec, cfg).error

    report = MomentReport(
        mean=mean.tolist(),
        covariance=cov.tolist(),
        second_moment=float(np.trace(raw)),
        third_marginal=np.atleast_1d(third).tolist(),
        fourth_moment=fourth,
        error_estimate=float(error),
        method="mc" if nodes.monte_carlo else "tensor",
    )
    check_poincare_hint(spec, report)
    return report


def check_poincare_hint(spec: MeasureSpec, report: MomentReport, tol: float = 1e-6) -> bool:
    """Warn when an isotropic measure carries a Poincare hint below the Gaussian value 1."""
    if spec.known_poincare is None or not report.is_isotropic(tol):
        return True
    if spec.known_poincare < 1.0 - tol:
        logger.warning("poincare_hint_below_gaussian", measure=spec.name, known_poincare=spec.known_poincare)
        return False
    return True


def standardize(spec: MeasureSpec, cfg: Optional[IntegrationSettings] = None) -> MeasureSpec:
    """Affine image of ``spec`` with mean zero and identity covariance."""
    if spec.standardized:
        return spec
    report = moments(spec, cfg)
    mean = report.mean_array()
    cov = report.covariance_array()
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] <= 1e-12 * max(eigvals[-1], 1e-300):
        raise SingularCovarianceError(f"Covariance of {spec.name} is singular: eigenvalues {eigvals.tolist()}")
    if report.is_isotropic(ISOTROPY_TOL):
        return spec.with_updates(standardized=True)
    whitening = eigvecs @ np.diag(eigvals ** -0.5) @ eigvecs.T
    out = affine_transform(spec, whitening, -whitening @ mean, name=f"{spec.name}|std")
    logger.debug("measure_standardized", measure=spec.name, kept_poincare=out.known_poincare is not None)
    return out.with_updates(standardized=True)
