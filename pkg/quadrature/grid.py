"""
Uniform one-dimensional grids.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """``m`` equispaced nodes on [lo, hi]."""
    lo: float
    hi: float
    m: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"Grid needs at least 2 nodes, got {self.m}")
        if not self.lo < self.hi:
            raise ValueError(f"Grid bounds must satisfy lo < hi, got ({self.lo}, {self.hi})")
        nodes = np.linspace(self.lo, self.hi, self.m)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.m - 1)

    def same_as(self, other: "Grid1D", rtol: float = 1e-12) -> bool:
        """Whether two grids share node count and endpoints."""
        scale = max(1.0, abs(self.lo), abs(self.hi))
        return (
            self.m == other.m
            and abs(self.lo - other.lo) <= rtol * scale
            and abs(self.hi - other.hi) <= rtol * scale
        )

    def refined(self) -> "Grid1D":
        """Grid with halved spacing on the same interval."""
        return Grid1D(self.lo, self.hi, 2 * self.m - 1)

    def with_nodes(self, m: int) -> "Grid1D":
        return Grid1D(self.lo, self.hi, m)
