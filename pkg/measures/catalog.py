"""
Catalog of probability measures.

Every entry returns a frozen MeasureSpec with its sampler wired, analytic
normalizer, kink locations, tail bounds and moment budget. Classical Poincare
constants are attached where they are known in closed form.
"""

import inspect
import math
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import structlog
from scipy import special, stats

from core.exceptions import ParameterOutOfRangeError, SamplerError, UnknownMeasureError
from measures.spec import (
    Bounds,
    MeasureSpec,
    SamplerKind,
    SupportRegion,
    masked_log_density,
)

logger = structlog.get_logger(__name__)

Params = Union[Mapping[str, Any], Sequence[Any], None]

MIN_ACCEPTANCE = 1e-3


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterOutOfRangeError(message)


def _radial_norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.atleast_2d(x) ** 2, axis=1))


def gaussian(variance: float = 1.0, dim: int = 1, mean: Optional[Sequence[float]] = None,
             covariance: Optional[Sequence[Sequence[float]]] = None) -> MeasureSpec:
    """Gaussian with covariance ``variance * I`` (or an explicit ``covariance``)."""
    _require(dim >= 1, f"Gaussian dimension must be positive, got {dim}")
    if covariance is None:
        _require(variance > 0, f"Gaussian variance must be positive, got {variance}")
        cov = variance * np.eye(dim)
    else:
        cov = np.atleast_2d(np.asarray(covariance, dtype=float))
        dim = cov.shape[0]
        _require(cov.shape == (dim, dim) and np.allclose(cov, cov.T),
                 "Gaussian covariance must be a symmetric square matrix")
    m = np.zeros(dim) if mean is None else np.asarray(mean, dtype=float).reshape(dim)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ParameterOutOfRangeError("Gaussian covariance must be positive definite")
    precision = np.linalg.inv(cov)
    precision = 0.5 * (precision + precision.T)
    _, logdet = np.linalg.slogdet(2.0 * np.pi * cov)
    eigmax = float(np.max(np.linalg.eigvalsh(cov)))
    diagonal = np.count_nonzero(cov - np.diag(np.diag(cov))) == 0
    sd = np.sqrt(np.diag(cov))

    def log_density(x: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(x) - m
        return -0.5 * np.einsum('ni,ij,nj->n', z, precision, z)

    def potential_gradient(x: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(x) - m) @ precision

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return m + rng.standard_normal((n, dim)) @ chol.T

    def tail_bound(mass_tol: float) -> Bounds:
        z = stats.norm.isf(mass_tol / (2.0 * dim))
        return tuple((m[i] - z * sd[i], m[i] + z * sd[i]) for i in range(dim))

    marginals = ()
    if diagonal and dim > 1:
        marginals = tuple(gaussian(variance=float(cov[i, i]), mean=[m[i]]) for i in range(dim))

    return MeasureSpec(
        name="gaussian",
        dim=dim,
        log_density=log_density,
        support=SupportRegion.whole(dim),
        log_normalizer=0.5 * logdet,
        potential_gradient=potential_gradient,
        known_poincare=eigmax,
        sampler=SamplerKind.DIRECT,
        draw=draw,
        params={"variance": variance, "dim": dim, "mean": m.tolist(), "covariance": cov.tolist()},
        moment_budget=math.inf,
        tail_bound=tail_bound,
        marginals=marginals,
    )


def uniform(a: float = -math.sqrt(3.0), b: float = math.sqrt(3.0)) -> MeasureSpec:
    """Uniform law on the interval [a, b]."""
    _require(a < b, f"Uniform bounds must satisfy a < b, got ({a}, {b})")
    support = SupportRegion.interval(a, b)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return (a + (b - a) * rng.random(n)).reshape(n, 1)

    return MeasureSpec(
        name="uniform",
        dim=1,
        log_density=masked_log_density(lambda x: np.zeros(np.atleast_2d(x).shape[0]), support),
        support=support,
        log_normalizer=math.log(b - a),
        potential_gradient=lambda x: np.zeros_like(np.atleast_2d(x)),
        known_poincare=((b - a) / math.pi) ** 2,
        sampler=SamplerKind.INVERSE_CDF,
        draw=draw,
        params={"a": a, "b": b},
        kinks=((a, b),),
        tail_bound=lambda mass_tol: ((a, b),),
    )


def laplace(b: float = 1.0 / math.sqrt(2.0)) -> MeasureSpec:
    """Centered Laplace law with scale ``b`` (variance 2 b^2)."""
    _require(b > 0, f"Laplace scale must be positive, got {b}")

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n) - 0.5
        return (-b * np.sign(u) * np.log1p(-2.0 * np.abs(u))).reshape(n, 1)

    def tail_bound(mass_tol: float) -> Bounds:
        r = b * math.log(1.0 / mass_tol)
        return ((-r, r),)

    return MeasureSpec(
        name="laplace",
        dim=1,
        log_density=lambda x: -np.abs(np.atleast_2d(x)[:, 0]) / b,
        support=SupportRegion.whole(1),
        log_normalizer=math.log(2.0 * b),
        potential_gradient=lambda x: np.sign(np.atleast_2d(x)) / b,
        known_poincare=4.0 * b * b,
        sampler=SamplerKind.INVERSE_CDF,
        draw=draw,
        params={"b": b},
        kinks=((0.0,),),
        tail_bound=tail_bound,
    )


def centered_exponential(rate: float = 1.0, shift: float = 0.0) -> MeasureSpec:
    """Law of E - 1/rate + shift with E exponential; centered when shift = 0."""
    _require(rate > 0, f"Exponential rate must be positive, got {rate}")
    lo = shift - 1.0 / rate
    support = SupportRegion.interval(lo, math.inf)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return (lo - np.log1p(-rng.random(n)) / rate).reshape(n, 1)

    def tail_bound(mass_tol: float) -> Bounds:
        return ((lo, lo + math.log(1.0 / mass_tol) / rate),)

    return MeasureSpec(
        name="centered-exponential",
        dim=1,
        log_density=masked_log_density(lambda x: -rate * (np.atleast_2d(x)[:, 0] - lo), support),
        support=support,
        log_normalizer=-math.log(rate),
        potential_gradient=lambda x: np.full_like(np.atleast_2d(x), rate, dtype=float),
        known_poincare=4.0 / rate ** 2,
        sampler=SamplerKind.INVERSE_CDF,
        draw=draw,
        params={"rate": rate, "shift": shift},
        kinks=((lo,),),
        tail_bound=tail_bound,
    )


def generalized_cauchy(beta: float, dim: int = 1, check_ranges: bool = True) -> MeasureSpec:
    """Density proportional to (1 + |x|^2)^(-beta) on R^d.

    Moments of order below 2 beta - d are finite. With ``check_ranges`` the
    parameter must exceed max((d + 4) / 2, d), the range in which the measure
    admits a Stein kernel with finite discrepancy.
    """
    _require(dim >= 1, f"Cauchy dimension must be positive, got {dim}")
    _require(beta > dim / 2.0, f"Cauchy density is not integrable for beta={beta}, d={dim}")
    if check_ranges:
        threshold = max((dim + 4) / 2.0, float(dim))
        _require(beta > threshold,
                 f"generalized-cauchy requires beta > {threshold:g} for d={dim}, got beta={beta}")
    nu = 2.0 * beta - dim
    log_normalizer = 0.5 * dim * math.log(math.pi) + special.gammaln(beta - dim / 2.0) - special.gammaln(beta)

    def log_density(x: np.ndarray) -> np.ndarray:
        return -beta * np.log1p(np.sum(np.atleast_2d(x) ** 2, axis=1))

    def potential_gradient(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return 2.0 * beta * x / (1.0 + np.sum(x ** 2, axis=1, keepdims=True))

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        # X = Z / sqrt(chi2_nu) has the required radial law
        z = rng.standard_normal((n, dim))
        return z / np.sqrt(rng.chisquare(nu, n))[:, None]

    def tail_bound(mass_tol: float) -> Bounds:
        r = math.sqrt(dim * stats.f.isf(mass_tol, dim, nu) / nu)
        return tuple((-r, r) for _ in range(dim))

    return MeasureSpec(
        name="generalized-cauchy",
        dim=dim,
        log_density=log_density,
        support=SupportRegion.whole(dim),
        log_normalizer=float(log_normalizer),
        potential_gradient=potential_gradient,
        sampler=SamplerKind.DIRECT,
        draw=draw,
        params={"beta": beta, "dim": dim},
        kinks=tuple(() for _ in range(dim)),
        moment_budget=nu,
        tail_bound=tail_bound,
        quadrature_hint="mc" if dim >= 3 else None,
    )


def subexponential(p: float, dim: int = 1) -> MeasureSpec:
    """Density proportional to exp(-|x|^p) on R^d."""
    _require(p > 0, f"Subexponential exponent must be positive, got {p}")
    _require(dim >= 1, f"Subexponential dimension must be positive, got {dim}")
    log_normalizer = (
        math.log(2.0) + 0.5 * dim * math.log(math.pi) - special.gammaln(dim / 2.0)
        + special.gammaln(dim / p) - math.log(p)
    )

    def log_density(x: np.ndarray) -> np.ndarray:
        return -_radial_norm(x) ** p

    def potential_gradient(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        r = _radial_norm(x)[:, None]
        with np.errstate(divide='ignore', invalid='ignore'):
            g = np.where(r > 0, p * r ** (p - 2.0) * x, 0.0)
        return g

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        radius = rng.gamma(dim / p, 1.0, n) ** (1.0 / p)
        direction = rng.standard_normal((n, dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        return radius[:, None] * direction

    def tail_bound(mass_tol: float) -> Bounds:
        r = special.gammainccinv(dim / p, mass_tol) ** (1.0 / p)
        return tuple((-r, r) for _ in range(dim))

    return MeasureSpec(
        name="subexponential",
        dim=dim,
        log_density=log_density,
        support=SupportRegion.whole(dim),
        log_normalizer=float(log_normalizer),
        potential_gradient=potential_gradient,
        sampler=SamplerKind.DIRECT,
        draw=draw,
        params={"p": p, "dim": dim},
        kinks=tuple((0.0,) for _ in range(dim)),
        tail_bound=tail_bound,
        quadrature_hint="mc" if dim >= 3 else None,
    )


def product(components: Sequence[Union[MeasureSpec, Mapping[str, Any]]]) -> MeasureSpec:
    """Product of one-dimensional measures."""
    specs = [c if isinstance(c, MeasureSpec) else catalog(c["name"], c.get("params")) for c in components]
    _require(len(specs) >= 1, "product requires at least one component")
    for s in specs:
        _require(s.dim == 1, f"product components must be one-dimensional, got {s.name} in d={s.dim}")
    dim = len(specs)
    support = SupportRegion.box([s.support.bounds[0] for s in specs])

    def log_density(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return sum(s.log_pdf(x[:, i:i + 1]) for i, s in enumerate(specs))

    potential_gradient = None
    if all(s.potential_gradient is not None for s in specs):
        def potential_gradient(x: np.ndarray) -> np.ndarray:
            x = np.atleast_2d(x)
            return np.column_stack([s.grad_potential(x[:, i:i + 1])[:, 0] for i, s in enumerate(specs)])

    draw = None
    if all(s.draw is not None for s in specs):
        def draw(rng: np.random.Generator, n: int) -> np.ndarray:
            return np.column_stack([s.as_points(s.draw(rng, n))[:, 0] for s in specs])

    tail_bound = None
    if all(s.tail_bound is not None for s in specs):
        def tail_bound(mass_tol: float) -> Bounds:
            return tuple(s.tail_bound(mass_tol / dim)[0] for s in specs)

    poincare = [s.known_poincare for s in specs]
    return MeasureSpec(
        name="product(" + ",".join(s.name for s in specs) + ")",
        dim=dim,
        log_density=log_density,
        support=support,
        potential_gradient=potential_gradient,
        known_poincare=max(poincare) if all(c is not None for c in poincare) else None,
        sampler=SamplerKind.PRODUCT,
        draw=draw,
        params={"components": [{"name": s.name, "params": dict(s.params)} for s in specs]},
        kinks=tuple(s.kinks_for_axis(0) for s in specs),
        moment_budget=min((s.moment_budget for s in specs), key=lambda v: math.inf if v is None else v),
        tail_bound=tail_bound,
        quadrature_hint="mc" if any(s.quadrature_hint == "mc" for s in specs) else None,
        marginals=tuple(specs) if dim > 1 else (),
    )


def gaussian_mixture(weights: Sequence[float], means: Sequence[float],
                     variances: Sequence[float]) -> MeasureSpec:
    """One-dimensional mixture of Gaussians."""
    w = np.asarray(weights, dtype=float)
    mu = np.asarray(means, dtype=float)
    var = np.asarray(variances, dtype=float)
    _require(w.ndim == 1 and w.size >= 1 and w.shape == mu.shape == var.shape,
             "gaussian-mixture needs equal-length weights, means and variances")
    _require(bool(np.all(w > 0)), "gaussian-mixture weights must be positive")
    _require(bool(np.all(var > 0)), "gaussian-mixture variances must be positive")
    w = w / w.sum()
    sd = np.sqrt(var)
    log_w = np.log(w)

    def component_logpdf(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)[:, :1]
        return log_w + stats.norm.logpdf(x, loc=mu, scale=sd)

    def log_density(x: np.ndarray) -> np.ndarray:
        return special.logsumexp(component_logpdf(x), axis=1)

    def potential_gradient(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        lc = component_logpdf(x)
        resp = np.exp(lc - special.logsumexp(lc, axis=1, keepdims=True))
        return np.sum(resp * (x[:, :1] - mu) / var, axis=1, keepdims=True)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        k = rng.choice(w.size, size=n, p=w)
        return (mu[k] + sd[k] * rng.standard_normal(n)).reshape(n, 1)

    def tail_bound(mass_tol: float) -> Bounds:
        z = stats.norm.isf(mass_tol / (2.0 * w.size))
        return ((float(np.min(mu - z * sd)), float(np.max(mu + z * sd))),)

    return MeasureSpec(
        name="gaussian-mixture",
        dim=1,
        log_density=log_density,
        support=SupportRegion.whole(1),
        potential_gradient=potential_gradient,
        sampler=SamplerKind.DIRECT,
        draw=draw,
        params={"weights": w.tolist(), "means": mu.tolist(), "variances": var.tolist()},
        tail_bound=tail_bound,
    )


def uniform_annuli(r1: float, r2: float, r3: float, r4: float) -> MeasureSpec:
    """Uniform law on the union of two disjoint closed annuli in the plane."""
    _require(0.0 <= r1 < r2 < r3 < r4,
             f"uniform-annuli radii must satisfy 0 <= r1 < r2 < r3 < r4, got {(r1, r2, r3, r4)}")
    support = SupportRegion.annuli(r1, r2, r3, r4)
    area = math.pi * (r2 ** 2 - r1 ** 2 + r4 ** 2 - r3 ** 2)
    acceptance = area / (2.0 * r4) ** 2

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        if acceptance < MIN_ACCEPTANCE:
            raise SamplerError(
                f"Rejection acceptance rate {acceptance:.3g} below {MIN_ACCEPTANCE:g} "
                f"for annuli radii {(r1, r2, r3, r4)}"
            )
        out = np.empty((0, 2))
        while out.shape[0] < n:
            batch = max(1024, int(1.2 * (n - out.shape[0]) / acceptance))
            proposals = rng.uniform(-r4, r4, size=(batch, 2))
            out = np.vstack([out, proposals[support.contains(proposals)]])
        return out[:n]

    return MeasureSpec(
        name="uniform-annuli",
        dim=2,
        log_density=masked_log_density(lambda x: np.zeros(np.atleast_2d(x).shape[0]), support),
        support=support,
        log_normalizer=math.log(area),
        potential_gradient=lambda x: np.zeros_like(np.atleast_2d(x), dtype=float),
        sampler=SamplerKind.REJECTION,
        draw=draw,
        params={"r1": r1, "r2": r2, "r3": r3, "r4": r4},
        tail_bound=lambda mass_tol: ((-r4, r4), (-r4, r4)),
        quadrature_hint="mc",
    )


def _expression(**kwargs: Any) -> MeasureSpec:
    from measures.expressions import expression_measure
    return expression_measure(**kwargs)


CATALOG: Dict[str, Callable[..., MeasureSpec]] = {
    "gaussian": gaussian,
    "uniform": uniform,
    "laplace": laplace,
    "centered-exponential": centered_exponential,
    "generalized-cauchy": generalized_cauchy,
    "subexponential": subexponential,
    "product": product,
    "gaussian-mixture": gaussian_mixture,
    "uniform-annuli": uniform_annuli,
    "expression": _expression,
}

PARAMETER_DOCS: Dict[str, str] = {
    "gaussian": "variance=1, dim=1, mean=None, covariance=None",
    "uniform": "a=-sqrt(3), b=sqrt(3)",
    "laplace": "b=1/sqrt(2)",
    "centered-exponential": "rate=1, shift=0",
    "generalized-cauchy": "beta, dim=1",
    "subexponential": "p, dim=1",
    "product": "components=[{name, params}, ...]",
    "gaussian-mixture": "weights, means, variances",
    "uniform-annuli": "r1, r2, r3, r4",
    "expression": "log_density, dim=1, bounds=None, known_poincare=None, weight=None",
}


def catalog(name: str, params: Params = None, check_ranges: bool = True) -> MeasureSpec:
    """Build a catalog measure by name.

    ``params`` is a mapping of keyword arguments or a positional list.
    ``check_ranges=False`` relaxes the kernel-existence range of the heavy
    tailed entries down to integrability.
    """
    if name not in CATALOG:
        raise UnknownMeasureError(f"Unknown measure '{name}'; known: {', '.join(sorted(CATALOG))}")
    builder = CATALOG[name]
    if params is None:
        args, kwargs = [], {}
    elif isinstance(params, Mapping):
        args, kwargs = [], dict(params)
    else:
        args, kwargs = list(params), {}
    if name == "generalized-cauchy":
        kwargs["check_ranges"] = check_ranges
    try:
        inspect.signature(builder).bind(*args, **kwargs)
    except TypeError as e:
        raise ParameterOutOfRangeError(f"Invalid parameters for '{name}': {e}")
    spec = builder(*args, **kwargs)
    logger.debug("measure_built", measure=spec.name, dim=spec.dim)
    return spec


def list_measures() -> List[Dict[str, str]]:
    """Names and parameter signatures of the catalog entries."""
    return [{"name": name, "params": PARAMETER_DOCS[name]} for name in sorted(CATALOG)]
