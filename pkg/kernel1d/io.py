"""
CSV serialisation of tabulated densities and kernels.
"""

import csv
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from core.data_models import KernelSource
from core.exceptions import GridMismatchError, ReportError
from kernel1d.density import GridDensity1D
from kernel1d.field import TabulatedKernel1D
from quadrature.grid import Grid1D

KERNEL_CSV_HEADER = ("x", "p", "cdf", "tau")


def _fmt(value: float) -> str:
    return format(float(value), '.17g')


def write_kernel_csv(path: Union[str, Path], p: GridDensity1D, tau: TabulatedKernel1D) -> Path:
    """Write columns (x, p, cdf, tau); identical inputs give identical bytes."""
    if not tau.grid.same_as(p.grid):
        raise GridMismatchError("Kernel and density must share a grid to be written together")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(KERNEL_CSV_HEADER)
            for row in zip(p.x, p.values, p.cdf, tau.values):
                writer.writerow([_fmt(v) for v in row])
    except OSError as e:
        raise ReportError(f"Cannot write kernel CSV {path}: {e}")
    return path


def read_kernel_csv(path: Union[str, Path]) -> Tuple[GridDensity1D, TabulatedKernel1D]:
    """Read a file written by ``write_kernel_csv``."""
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    x, p, cdf, tau = data.T
    grid = Grid1D(float(x[0]), float(x[-1]), x.size)
    density = GridDensity1D(grid=grid, values=p, cdf=cdf, normalized=True)
    return density, TabulatedKernel1D(grid, tau, KernelSource.CLOSED_FORM)
