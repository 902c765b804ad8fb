"""
Data models for steinlab.

Defines the report structures exchanged between the numeric modules, the
experiment runner and the report emitter, with Pydantic validation.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class BoundDirection(str, Enum):
    """Which side of the bound a record must land on."""
    UPPER = "upper"  # measured <= bound
    LOWER = "lower"  # measured >= bound


class KernelSource(str, Enum):
    """Where a Stein kernel field came from."""
    CLOSED_FORM = "closed-form"
    GALERKIN = "galerkin"
    PROPAGATED = "propagated"
    IDENTITY = "identity"


class ReferenceMode(str, Enum):
    """Right-hand side used by the Galerkin weak problem."""
    GAUSSIAN = "gaussian-reference"
    POTENTIAL = "potential-reference"


class SpectralMethod(str, Enum):
    """Numerical route to a Poincare constant estimate."""
    FINITE_DIFFERENCE = "finite-difference"
    RAYLEIGH_RITZ = "rayleigh-ritz"


class ExperimentRecord(BaseModel):
    """One row of a bound-verification experiment."""
    label: str = Field(..., min_length=1, description="Bound name")
    n: int = Field(..., ge=0, description="Convolution index or sample count")
    m: Optional[int] = Field(None, ge=0, description="Comparison index")
    measured: float = Field(..., description="Measured side of the inequality")
    bound: float = Field(..., description="Bound side of the inequality")
    passed: bool = Field(..., description="Whether the inequality holds within tolerance")
    direction: BoundDirection = Field(default=BoundDirection.UPPER)
    tolerance_used: float = Field(default=1e-6, ge=0.0, description="Relative tolerance")
    abs_tolerance: float = Field(default=1e-10, ge=0.0, description="Absolute slack")
    runtime_ms: int = Field(default=0, ge=0)
    informational: bool = Field(default=False, description="Never affects the exit status")
    measure: str = Field(default="", description="Measure declaration the record refers to")
    seed: Optional[int] = Field(None)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(use_enum_values=True)

    @classmethod
    def check(
        cls,
        label: str,
        n: int,
        measured: float,
        bound: float,
        direction: BoundDirection = BoundDirection.UPPER,
        tolerance: float = 1e-6,
        abs_tolerance: float = 1e-10,
        **extra: Any,
    ) -> "ExperimentRecord":
        """Build a record and evaluate its pass flag."""
        passed = inequality_holds(measured, bound, direction, tolerance, abs_tolerance)
        return cls(
            label=label,
            n=n,
            measured=float(measured),
            bound=float(bound),
            passed=passed,
            direction=direction,
            tolerance_used=tolerance,
            abs_tolerance=abs_tolerance,
            **extra,
        )

    def sort_key(self) -> tuple:
        """Canonical ordering key: (label, n, m, seed, measure)."""
        return (
            self.label,
            self.n,
            -1 if self.m is None else self.m,
            -1 if self.seed is None else self.seed,
            self.measure,
        )

    def is_failure(self) -> bool:
        """Whether this record should make the run fail."""
        return not self.informational and not self.passed


def inequality_holds(
    measured: float,
    bound: float,
    direction: BoundDirection = BoundDirection.UPPER,
    tolerance: float = 1e-6,
    abs_tolerance: float = 1e-10,
) -> bool:
    """Evaluate ``measured <= bound`` (or ``>=``) with relative and absolute slack."""
    if not (math.isfinite(measured) and math.isfinite(bound)):
        return False
    if BoundDirection(direction) == BoundDirection.UPPER:
        return measured <= bound + tolerance * abs(bound) + abs_tolerance
    return measured >= bound - tolerance * abs(bound) - abs_tolerance


class DiscrepancyReport(BaseModel):
    """Stein discrepancy of a kernel against the identity."""
    s_squared: float = Field(..., description="Integral of ||tau - Id||_HS^2")
    second_moment_tau: float = Field(..., ge=0.0, description="Integral of ||tau||_HS^2")
    bound_value: Optional[float] = Field(None, description="Poincare-type upper bound")
    bound_name: str = Field(default="")
    residual_max: float = Field(default=0.0, ge=0.0, description="Normalised weak residual")
    out_of_span_residual: Optional[float] = Field(None, ge=0.0)
    regularized: bool = Field(default=False)
    degree: Optional[int] = Field(None, ge=0)

    @field_validator("s_squared")
    @classmethod
    def validate_nonnegative(cls, v):
        """Clamp round-off negatives; reject genuinely negative discrepancies."""
        if v < -1e-9:
            raise ValueError(f"Stein discrepancy must be nonnegative, got {v}")
        return max(v, 0.0)

    def bound_holds(self, tolerance: float = 1e-6) -> bool:
        """Check s_squared against bound_value (if any)."""
        if self.bound_value is None:
            return True
        return self.s_squared <= self.bound_value * (1.0 + tolerance) + 1e-10


class SpectralReport(BaseModel):
    """Estimate of a Poincare constant as the inverse spectral gap."""
    cp_estimate: float = Field(..., gt=0.0)
    lambda1: float = Field(..., gt=0.0, description="Smallest positive eigenvalue")
    method: SpectralMethod
    grid_size: Optional[int] = Field(None, gt=0)
    basis_degree: Optional[int] = Field(None, gt=0)
    convergence_gap: float = Field(default=0.0, ge=0.0)
    interval: Optional[List[float]] = Field(None, description="Truncated support used")

    model_config = ConfigDict(use_enum_values=True)


class MomentReport(BaseModel):
    """Low-order moments of a measure with error estimates."""
    mean: List[float]
    covariance: List[List[float]]
    second_moment: float = Field(..., ge=0.0)
    third_marginal: List[float]
    fourth_moment: Optional[float] = Field(None, ge=0.0)
    error_estimate: float = Field(default=0.0, ge=0.0)
    method: str = Field(default="tensor")

    @model_validator(mode="after")
    def validate_covariance(self):
        """Covariance must be symmetric positive semidefinite within 1e-10."""
        cov = np.asarray(self.covariance, dtype=float)
        scale = max(1.0, float(np.max(np.abs(cov)))) if cov.size else 1.0
        if cov.shape != (len(self.mean), len(self.mean)):
            raise ValueError(f"Covariance shape {cov.shape} does not match dimension {len(self.mean)}")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-10 * scale:
            raise ValueError("Covariance matrix is not symmetric")
        if np.min(np.linalg.eigvalsh(cov)) < -1e-10 * scale:
            raise ValueError("Covariance matrix is not positive semidefinite")
        return self

    @property
    def dim(self) -> int:
        return len(self.mean)

    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    def covariance_array(self) -> np.ndarray:
        return np.asarray(self.covariance, dtype=float)

    def is_isotropic(self, tol: float = 1e-6) -> bool:
        """Mean zero and identity covariance within ``tol``."""
        cov = self.covariance_array()
        return bool(
            np.max(np.abs(self.mean_array())) <= tol
            and np.max(np.abs(cov - np.eye(self.dim))) <= tol
        )
