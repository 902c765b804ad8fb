"""
Quadrature rules, grids and integration against measures.
"""

from .grid import Grid1D
from .integration import IntegralEstimate, NodeSet, integrate, truncate_support, weighted_nodes
from .rules import QuadratureRule, composite_rule, legendre_rule

__all__ = [
    'Grid1D',
    'IntegralEstimate',
    'NodeSet',
    'QuadratureRule',
    'composite_rule',
    'integrate',
    'legendre_rule',
    'truncate_support',
    'weighted_nodes',
]
