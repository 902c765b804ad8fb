"""
Representation of probability measures on R^d.

A MeasureSpec bundles a (possibly unnormalized) log-density with its support,
potential gradient, sampler and the metadata the numeric modules consult:
kink locations for panel alignment, the analytic moment budget, tail bounds
for support truncation, and classical Poincare constants where known.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

ArrayMap = Callable[[np.ndarray], np.ndarray]
Draw = Callable[[np.random.Generator, int], np.ndarray]
Bounds = Tuple[Tuple[float, float], ...]


class SupportKind(str, Enum):
    """Shape of a support region."""
    INTERVAL = "interval"
    HALF_LINE = "half-space-cut interval"
    BOX = "box"
    WHOLE_SPACE = "all"
    ANNULI = "annuli-union"


class SamplerKind(str, Enum):
    """How samples are drawn from a measure."""
    INVERSE_CDF = "inverse-CDF"
    REJECTION = "rejection"
    DIRECT = "direct"
    PRODUCT = "product-of-1D"
    NONE = "none"


@dataclass(frozen=True)
class SupportRegion:
    """Support of a measure: per-axis bounds plus an optional annuli structure."""
    kind: SupportKind
    bounds: Bounds
    radii: Tuple[float, ...] = ()

    def __post_init__(self):
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"Support bounds must satisfy lower < upper, got ({lo}, {hi})")
        if self.kind == SupportKind.ANNULI:
            if len(self.radii) != 4 or list(self.radii) != sorted(self.radii) or len(set(self.radii)) != 4:
                raise ValueError(f"Annuli radii must be strictly increasing, got {self.radii}")

    @classmethod
    def interval(cls, lo: float, hi: float) -> 'SupportRegion':
        """One-dimensional interval, possibly with infinite endpoints."""
        finite = (math.isfinite(lo), math.isfinite(hi))
        if all(finite):
            kind = SupportKind.INTERVAL
        elif any(finite):
            kind = SupportKind.HALF_LINE
        else:
            kind = SupportKind.WHOLE_SPACE
        return cls(kind=kind, bounds=((float(lo), float(hi)),))

    @classmethod
    def box(cls, bounds: Sequence[Tuple[float, float]]) -> 'SupportRegion':
        """Axis-aligned box; a single axis degenerates to an interval."""
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
        if len(bounds) == 1:
            return cls.interval(*bounds[0])
        if all(not math.isfinite(lo) and not math.isfinite(hi) for lo, hi in bounds):
            return cls(kind=SupportKind.WHOLE_SPACE, bounds=bounds)
        return cls(kind=SupportKind.BOX, bounds=bounds)

    @classmethod
    def whole(cls, dim: int) -> 'SupportRegion':
        return cls.box([(-math.inf, math.inf)] * dim)

    @classmethod
    def annuli(cls, r1: float, r2: float, r3: float, r4: float) -> 'SupportRegion':
        return cls(kind=SupportKind.ANNULI, bounds=((-r4, r4), (-r4, r4)), radii=(r1, r2, r3, r4))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    def is_compact(self) -> bool:
        return all(math.isfinite(lo) and math.isfinite(hi) for lo, hi in self.bounds)

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Boolean mask of the points (n, d) lying in the closed support."""
        x = np.atleast_2d(x)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        mask = np.all((x >= lo) & (x <= hi), axis=1)
        if self.kind == SupportKind.ANNULI:
            r = np.linalg.norm(x, axis=1)
            r1, r2, r3, r4 = self.radii
            mask &= ((r >= r1) & (r <= r2)) | ((r >= r3) & (r <= r4))
        return mask


@dataclass(frozen=True)
class MeasureSpec:
    """A probability measure on R^d.

    ``log_density`` may be unnormalized; the density is
    ``exp(log_density(x) - log_normalizer)`` on the support and zero outside.
    ``potential_gradient`` is the gradient of H = -log density.
    ``moment_budget`` is the exclusive supremum of finite moment orders
    (``None`` when unknown, which makes moment computations sweep the
    truncation instead).
    """
    name: str
    dim: int
    log_density: ArrayMap
    support: SupportRegion
    log_normalizer: float = 0.0
    normalized: bool = True
    potential_gradient: Optional[ArrayMap] = None
    known_poincare: Optional[float] = None
    weight: Optional[ArrayMap] = None
    sampler: SamplerKind = SamplerKind.NONE
    draw: Optional[Draw] = None
    params: Dict[str, Any] = field(default_factory=dict)
    kinks: Tuple[Tuple[float, ...], ...] = ()
    moment_budget: Optional[float] = math.inf
    tail_bound: Optional[Callable[[float], Bounds]] = None
    quadrature_hint: Optional[str] = None
    marginals: Tuple['MeasureSpec', ...] = ()
    standardized: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"Measure dimension must be positive, got {self.dim}")
        if self.support.dim != self.dim:
            raise ValueError(f"Support dimension {self.support.dim} does not match {self.dim}")
        if self.known_poincare is not None and self.known_poincare <= 0:
            raise ValueError(f"Poincare constant must be positive, got {self.known_poincare}")

    def as_points(self, x: np.ndarray) -> np.ndarray:
        """Coerce ``x`` to an (n, d) array."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if self.dim == 1 else x.reshape(1, -1)
        return x

    def log_pdf(self, x: np.ndarray) -> np.ndarray:
        """Normalized log-density; -inf outside the support."""
        x = self.as_points(x)
        inside = self.support.contains(x)
        out = np.full(x.shape[0], -np.inf)
        if np.any(inside):
            with np.errstate(divide='ignore', invalid='ignore'):
                out[inside] = self.log_density(x[inside]) - self.log_normalizer
        return out

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Normalized density; zero outside the support."""
        return np.exp(self.log_pdf(x))

    def grad_potential(self, x: np.ndarray) -> np.ndarray:
        """Gradient of H = -log density at the points (n, d)."""
        if self.potential_gradient is None:
            raise ValueError(f"Measure {self.name} has no potential gradient")
        x = self.as_points(x)
        return np.asarray(self.potential_gradient(x), dtype=float).reshape(x.shape)

    def is_product(self) -> bool:
        return len(self.marginals) == self.dim and self.dim > 1

    def kinks_for_axis(self, axis: int) -> Tuple[float, ...]:
        if axis < len(self.kinks):
            return self.kinks[axis]
        return ()

    def with_updates(self, **changes: Any) -> 'MeasureSpec':
        """Copy of this spec with ``changes`` applied."""
        return dataclasses.replace(self, **changes)


def masked_log_density(log_density: ArrayMap, support: SupportRegion) -> ArrayMap:
    """Wrap ``log_density`` so that it is -inf outside ``support``."""
    def wrapped(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        inside = support.contains(x)
        out = np.full(x.shape[0], -np.inf)
        if np.any(inside):
            with np.errstate(divide='ignore', invalid='ignore'):
                out[inside] = log_density(x[inside])
        return out
    return wrapped


def _scaled_isometry_factor(A: np.ndarray) -> Optional[float]:
    """Return s if A^T A = s^2 I (A is a scalar multiple of an isometry)."""
    gram = A.T @ A
    s2 = float(gram[0, 0])
    if s2 > 0 and np.allclose(gram, s2 * np.eye(A.shape[0]), rtol=1e-12, atol=1e-14 * s2):
        return math.sqrt(s2)
    return None


def _mapped_bounds(A: np.ndarray, b: np.ndarray, bounds: Bounds) -> Bounds:
    """Bounding box of the image of a box under y = A x + b."""
    out = []
    for i in range(A.shape[0]):
        lo = hi = float(b[i])
        for j, (blo, bhi) in enumerate(bounds):
            a = A[i, j]
            if a == 0.0:
                continue
            ends = (a * blo, a * bhi)
            lo += min(ends)
            hi += max(ends)
        out.append((lo, hi))
    return tuple(out)


def affine_transform(spec: MeasureSpec, A: np.ndarray, b: Optional[np.ndarray] = None,
                     name: Optional[str] = None) -> MeasureSpec:
    """Image of ``spec`` under y = A x + b.

    The Poincare constant and the converse-Poincare weight transform only when
    A is a scalar multiple of an isometry; otherwise they are dropped.
    """
    d = spec.dim
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(d) if b is None else np.asarray(b, dtype=float).reshape(d)
    if A.shape != (d, d):
        raise ValueError(f"Transform must be {d}x{d}, got {A.shape}")
    sign, logdet = np.linalg.slogdet(A)
    if sign == 0:
        raise ValueError("Affine transform must be invertible")
    A_inv = np.linalg.inv(A)
    diagonal = np.count_nonzero(A - np.diag(np.diag(A))) == 0
    factor = _scaled_isometry_factor(A)

    def pull_back(y: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(y) - b) @ A_inv.T

    def log_density(y: np.ndarray) -> np.ndarray:
        return spec.log_density(pull_back(y))

    potential_gradient = None
    if spec.potential_gradient is not None:
        def potential_gradient(y: np.ndarray) -> np.ndarray:
            return spec.potential_gradient(pull_back(y)) @ A_inv

    draw = None
    if spec.draw is not None:
        def draw(rng: np.random.Generator, n: int) -> np.ndarray:
            return spec.as_points(spec.draw(rng, n)) @ A.T + b

    weight = None
    known_poincare = None
    if factor is not None:
        if spec.known_poincare is not None:
            known_poincare = spec.known_poincare * factor ** 2
        if spec.weight is not None:
            def weight(y: np.ndarray) -> np.ndarray:
                return spec.weight(pull_back(y)) / factor ** 2

    bounds = _mapped_bounds(A, b, spec.support.bounds)
    if spec.support.kind == SupportKind.ANNULI and factor is not None and not np.any(b):
        support = SupportRegion.annuli(*(factor * r for r in spec.support.radii))
    else:
        support = SupportRegion.box(bounds)

    kinks: Tuple[Tuple[float, ...], ...] = ()
    tail_bound = None
    marginals: Tuple[MeasureSpec, ...] = ()
    if diagonal:
        kinks = tuple(
            tuple(sorted(A[i, i] * k + b[i] for k in spec.kinks_for_axis(i))) for i in range(d)
        )
        if spec.tail_bound is not None:
            def tail_bound(mass_tol: float) -> Bounds:
                return _mapped_bounds(A, b, spec.tail_bound(mass_tol))
        if spec.is_product():
            marginals = tuple(
                affine_transform(m, A[i:i + 1, i:i + 1], b[i:i + 1]) for i, m in enumerate(spec.marginals)
            )

    return dataclasses.replace(
        spec,
        name=name or f"{spec.name}|affine",
        log_density=log_density,
        support=support,
        log_normalizer=spec.log_normalizer + logdet,
        potential_gradient=potential_gradient,
        known_poincare=known_poincare,
        weight=weight,
        draw=draw,
        kinks=kinks,
        tail_bound=tail_bound,
        marginals=marginals,
        standardized=False,
    )


def scale(spec: MeasureSpec, a: float) -> MeasureSpec:
    """Law of a X for X ~ spec."""
    return affine_transform(spec, a * np.eye(spec.dim), name=f"{spec.name}|scale({a:g})")


def shift(spec: MeasureSpec, v: Sequence[float]) -> MeasureSpec:
    """Law of X + v for X ~ spec."""
    return affine_transform(spec, np.eye(spec.dim), np.asarray(v, dtype=float),
                            name=f"{spec.name}|shift")
