"""
Measures and weights declared by arithmetic expressions.

Expressions use the variables x1..xd, the operators + - * / ^ and the
functions exp, log, abs, sqrt. They are parsed with sympy; the potential
gradient of an expression measure is obtained by symbolic differentiation.
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from core.exceptions import ConfigValidationError, NormalizationError
from measures.spec import MeasureSpec, SamplerKind, SupportRegion, masked_log_density

logger = structlog.get_logger(__name__)

_TRANSFORMATIONS = standard_transformations + (convert_xor,)
_FUNCTIONS = {"exp": sympy.exp, "log": sympy.log, "abs": sympy.Abs, "sqrt": sympy.sqrt, "pi": sympy.pi}
_INVERSE_CDF_NODES = 4097


def _symbols(dim: int) -> List[sympy.Symbol]:
    return [sympy.Symbol(f"x{i + 1}", real=True) for i in range(dim)]


def parse_expression(text: str, dim: int) -> Tuple[sympy.Expr, List[sympy.Symbol]]:
    """Parse ``text`` as an expression in x1..x{dim}."""
    symbols = _symbols(dim)
    local = {str(s): s for s in symbols}
    local.update(_FUNCTIONS)
    try:
        expr = parse_expr(text, local_dict=local, transformations=_TRANSFORMATIONS, evaluate=True)
    except Exception as e:
        raise ConfigValidationError(f"Cannot parse expression '{text}': {e}")
    unknown = {str(s) for s in expr.free_symbols} - set(local)
    if unknown:
        raise ConfigValidationError(
            f"Expression '{text}' uses undeclared variables {sorted(unknown)} (allowed: x1..x{dim})"
        )
    return expr, symbols


def compile_expression(expr: sympy.Expr, symbols: Sequence[sympy.Symbol]) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized evaluator mapping points (n, d) to values (n,)."""
    fn = sympy.lambdify(list(symbols), expr, modules="numpy")

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        with np.errstate(divide='ignore', invalid='ignore'):
            values = fn(*(x[:, i] for i in range(x.shape[1])))
        return np.broadcast_to(np.asarray(values, dtype=float), (x.shape[0],)).copy()

    return evaluate


def expression_weight(text: str, dim: int = 1) -> Callable[[np.ndarray], np.ndarray]:
    """Weight function omega(x) from an expression."""
    expr, symbols = parse_expression(text, dim)
    return compile_expression(expr, symbols)


def _parse_bound(value) -> float:
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("inf", "+inf", "infinity"):
            return math.inf
        if v in ("-inf", "-infinity"):
            return -math.inf
    return float(value)


def _inverse_cdf_draw(spec: MeasureSpec, bounds: Tuple[float, float]):
    x = np.linspace(bounds[0], bounds[1], _INVERSE_CDF_NODES)
    p = spec.pdf(x.reshape(-1, 1))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(x))])
    cdf /= cdf[-1]

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return np.interp(rng.random(n), cdf, x).reshape(n, 1)

    return draw


def expression_measure(log_density: str, dim: int = 1, bounds: Optional[Sequence[Sequence]] = None,
                       known_poincare: Optional[float] = None, weight: Optional[str] = None,
                       name: Optional[str] = None) -> MeasureSpec:
    """Measure with density proportional to exp(log_density) on ``bounds``.

    The normalizing constant is computed once by quadrature and cached on the
    returned spec. ``known_poincare`` is carried as a hint only.
    """
    from config.settings import IntegrationSettings
    from quadrature.integration import integrate, truncate_support

    expr, symbols = parse_expression(log_density, dim)
    if bounds is None:
        support = SupportRegion.whole(dim)
    else:
        support = SupportRegion.box([(_parse_bound(lo), _parse_bound(hi)) for lo, hi in bounds])
    evaluate = compile_expression(expr, symbols)
    gradient_fns = [compile_expression(-sympy.diff(expr, s), symbols) for s in symbols]

    def potential_gradient(x: np.ndarray) -> np.ndarray:
        return np.column_stack([g(x) for g in gradient_fns])

    provisional = MeasureSpec(
        name=name or "expression",
        dim=dim,
        log_density=masked_log_density(evaluate, support),
        support=support,
        normalized=False,
        potential_gradient=potential_gradient,
        known_poincare=known_poincare,
        weight=expression_weight(weight, dim) if weight else None,
        params={"log_density": log_density, "dim": dim,
                "bounds": None if bounds is None else [list(b) for b in bounds]},
        moment_budget=None,
    )
    mass = integrate(lambda x: np.ones(x.shape[0]), provisional, IntegrationSettings()).value
    if not (mass > 0 and math.isfinite(mass)):
        raise NormalizationError(f"Expression density '{log_density}' has non-positive or infinite mass {mass}")
    spec = provisional.with_updates(log_normalizer=math.log(mass), normalized=True)
    if dim == 1:
        box = truncate_support(spec, 1e-12)[0]
        spec = spec.with_updates(sampler=SamplerKind.INVERSE_CDF, draw=_inverse_cdf_draw(spec, box))
    logger.info("expression_measure_normalized", expression=log_density, log_normalizer=spec.log_normalizer)
    return spec
