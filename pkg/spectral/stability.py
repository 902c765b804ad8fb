"""
Poincare-stability checks: a normalized measure whose Poincare constant (or
weighted analogue) is close to 1 is close to the standard Gaussian in W2.
"""

import math
from typing import Optional, Union

import numpy as np
import structlog

from config.settings import IntegrationSettings, SpectralSettings
from core.data_models import BoundDirection, ExperimentRecord
from core.exceptions import NormalizationError
from measures.spec import MeasureSpec
from quadrature.integration import weighted_nodes
from spectral.poincare import WeightMap, resolve_weight, weighted_second_moment

logger = structlog.get_logger(__name__)


def require_normalized(spec: MeasureSpec, cfg: Optional[IntegrationSettings] = None,
                       tol: float = 1e-6) -> float:
    """Check mean 0 and integral |x|^2 = d; returns the second moment.

    Raises:
        NormalizationError: either condition fails
    """
    nodes = weighted_nodes(spec, cfg)
    mass = float(np.sum(nodes.weights))
    mean = nodes.integrate(nodes.points) / mass
    second = float(nodes.integrate(np.sum(nodes.points ** 2, axis=1))) / mass
    slack = tol + 5.0 * nodes.standard_error(np.sum(nodes.points ** 2, axis=1))
    if np.max(np.abs(mean)) > tol + 5.0 * max(nodes.standard_error(nodes.points[:, i]) for i in range(spec.dim)):
        raise NormalizationError(f"{spec.name} must be centered for the stability bound (mean {mean.tolist()})")
    if abs(second - spec.dim) > slack * spec.dim:
        raise NormalizationError(
            f"{spec.name} must satisfy integral |x|^2 = d = {spec.dim} (got {second:.8g})"
        )
    return second


def stability_check_poincare(spec: MeasureSpec, cp: float, w2_to_gamma: float,
                             cfg: Optional[IntegrationSettings] = None,
                             settings: Optional[SpectralSettings] = None) -> ExperimentRecord:
    """Record for Cp >= 1 + W2(nu, gamma)^2 / d."""
    settings = settings or SpectralSettings()
    require_normalized(spec, cfg, settings.normalization_tol)
    rhs = 1.0 + w2_to_gamma ** 2 / spec.dim
    record = ExperimentRecord.check(
        "poincare-stability", 0, cp, rhs,
        direction=BoundDirection.LOWER,
        tolerance=settings.stability_tol,
        measure=spec.name,
        metadata={"w2": w2_to_gamma},
    )
    logger.info("stability_check", measure=spec.name, cp=cp, rhs=rhs, passed=record.passed)
    return record


def holder_product(spec: MeasureSpec, omega: WeightMap, p: float,
                   cfg: Optional[IntegrationSettings] = None) -> float:
    """||(1/d)|x|^2||_{L^p} * ||1/omega||_{L^q} with 1/p + 1/q = 1.

    An infinite exponent is evaluated as the supremum over the quadrature nodes.
    """
    if not p >= 1:
        raise ValueError(f"Holder exponent must be >= 1, got {p}")
    nodes = weighted_nodes(spec, cfg)
    x = nodes.points
    live = nodes.weights > 0
    radial = np.sum(x ** 2, axis=1) / spec.dim
    inverse = 1.0 / np.asarray(omega(x), dtype=float)
    q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1.0))

    def norm(values: np.ndarray, r: float) -> float:
        if math.isinf(r):
            return float(np.max(np.abs(values[live])))
        return float(nodes.integrate(np.abs(values) ** r)) ** (1.0 / r)

    return norm(radial, p) * norm(inverse, q)


def stability_check_weighted(spec: MeasureSpec, weight: Union[str, WeightMap, None], w2_to_gamma: float,
                             p: Optional[float] = None, cfg: Optional[IntegrationSettings] = None,
                             settings: Optional[SpectralSettings] = None) -> ExperimentRecord:
    """Weighted stability record (1/d) integral |x|^2/omega >= 1 + W2^2/d, or its Holder form for ``p``."""
    settings = settings or SpectralSettings()
    require_normalized(spec, cfg, settings.normalization_tol)
    omega = resolve_weight(weight, spec)
    rhs = 1.0 + w2_to_gamma ** 2 / spec.dim
    if p is None:
        label = "weighted-stability"
        lhs = weighted_second_moment(spec, omega, cfg) / spec.dim
    else:
        label = "holder-stability"
        lhs = holder_product(spec, omega, p, cfg)
    record = ExperimentRecord.check(
        label, 0, lhs, rhs,
        direction=BoundDirection.LOWER,
        tolerance=settings.stability_tol,
        measure=spec.name,
        metadata={"w2": w2_to_gamma, "p": p},
    )
    logger.info("stability_check", measure=spec.name, label=label, lhs=lhs, rhs=rhs, passed=record.passed)
    return record
