"""
Seeded sampling from measures.
"""

import numpy as np
from numpy.random import PCG64, Generator

from core.exceptions import NoSamplerError
from measures.spec import MeasureSpec, SamplerKind


def make_rng(seed: int) -> Generator:
    """Generator used for every seeded draw in the package."""
    return Generator(PCG64(seed))


def sample(spec: MeasureSpec, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` points (n, d) from ``spec``; identical for identical seeds."""
    if spec.draw is None or spec.sampler == SamplerKind.NONE:
        raise NoSamplerError(f"Measure {spec.name} has no sampler")
    if n < 1:
        raise ValueError(f"Sample size must be positive, got {n}")
    points = np.asarray(spec.draw(make_rng(seed), n), dtype=float)
    return points.reshape(n, spec.dim)
