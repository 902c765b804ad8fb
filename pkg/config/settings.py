"""
Settings classes for steinlab.

Defines typed configuration classes for every numeric module and for the
experiment runner. An experiment file's ``settings`` section is mapped onto
``SystemSettings.from_dict``.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple


def _default_points() -> Dict[int, Tuple[int, int]]:
    # (Gauss-Legendre points per panel, panels per axis)
    return {1: (64, 32), 2: (24, 16), 3: (24, 4)}


@dataclass
class IntegrationSettings:
    """Settings for numerical integration against a measure."""
    mode: str = "tensor"  # 'tensor' or 'mc'
    rules: Dict[int, Tuple[int, int]] = field(default_factory=_default_points)
    mc_samples: int = 200_000
    seed: int = 0
    mass_tol: float = 1e-16
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_nodes: int = 2 ** 20
    max_tensor_dim: int = 3

    def __post_init__(self):
        # YAML keys arrive as strings and pairs as lists
        self.rules = {int(k): (int(v[0]), int(v[1])) for k, v in self.rules.items()}
        if self.mode not in ("tensor", "mc"):
            raise ValueError(f"Unknown integration mode: {self.mode}")

    def rule_for(self, dim: int) -> Tuple[int, int]:
        """Points and panels per axis for dimension ``dim``."""
        if dim in self.rules:
            return self.rules[dim]
        return self.rules[max(self.rules)]


@dataclass
class KernelSettings:
    """Settings for tabulated one-dimensional densities and kernels."""
    grid_nodes: int = 2 ** 14 + 1
    mass_tol: float = 1e-20
    density_cutoff: float = 1e-12
    centering_tol: float = 1e-6


@dataclass
class GalerkinSettings:
    """Settings for the Galerkin Stein kernel solver."""
    degrees: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    mode: str = "gaussian-reference"
    ridge_factor: float = 1e-12
    max_condition: float = 1e12
    centering_tol: float = 1e-6
    residual_tol: float = 1e-10
    max_mc_dim: int = 6


@dataclass
class SpectralSettings:
    """Settings for Poincare constant estimation."""
    initial_grid: int = 2048
    max_grid: int = 2 ** 20
    mass_tol: float = 1e-40
    convergence_gap: float = 1e-4
    stability_tol: float = 1e-6
    normalization_tol: float = 1e-6


@dataclass
class CLTSettings:
    """Settings for CLT bound-verification experiments."""
    n_list: List[int] = field(default_factory=lambda: [1, 2, 4, 8, 16])
    checks: List[str] = field(default_factory=lambda: ["w2-rate", "monotonicity", "skewness"])
    t: Optional[float] = None
    max_n: int = 256
    bound_tol: float = 1e-6
    monotonicity_tol: float = 1e-4
    rio_tol: float = 0.2
    empirical_points: int = 2048
    empirical_seeds: int = 8
    empirical_slack: float = 1.1
    propagation_samples: int = 100_000
    min_propagation_samples: int = 1000
    local_linear: bool = True
    fisher_consistency_tol: float = 0.05
    seed: int = 0


@dataclass
class WorkerSettings:
    """Settings for the task worker pool."""
    jobs: int = 1
    ray_init: Dict[str, Any] = field(default_factory=dict)


@dataclass
class OutputSettings:
    """Settings for report files."""
    out_dir: str = "reports"
    formats: List[str] = field(default_factory=lambda: ["csv", "json", "md"])
    plot_data: bool = False
    include_timing: bool = False
    write_solutions: bool = False


@dataclass
class LoggingSettings:
    """Settings for logging configuration."""
    level: str = "INFO"
    json_output: bool = False
    file: Optional[str] = None
    console_output: bool = True


@dataclass
class SystemSettings:
    """Complete settings container."""
    integration: IntegrationSettings = field(default_factory=IntegrationSettings)
    kernel: KernelSettings = field(default_factory=KernelSettings)
    galerkin: GalerkinSettings = field(default_factory=GalerkinSettings)
    spectral: SpectralSettings = field(default_factory=SpectralSettings)
    clt: CLTSettings = field(default_factory=CLTSettings)
    workers: WorkerSettings = field(default_factory=WorkerSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)

    @classmethod
    def from_dict(cls, config_dict: Optional[Dict[str, Any]]) -> 'SystemSettings':
        """Create SystemSettings from a configuration dictionary.

        Args:
            config_dict: Configuration dictionary (missing sections use defaults)

        Returns:
            SystemSettings instance
        """
        config_dict = config_dict or {}
        return cls(
            integration=IntegrationSettings(**config_dict.get('integration', {})),
            kernel=KernelSettings(**config_dict.get('kernel', {})),
            galerkin=GalerkinSettings(**config_dict.get('galerkin', {})),
            spectral=SpectralSettings(**config_dict.get('spectral', {})),
            clt=CLTSettings(**config_dict.get('clt', {})),
            workers=WorkerSettings(**config_dict.get('workers', {})),
            output=OutputSettings(**config_dict.get('output', {})),
            logging=LoggingSettings(**config_dict.get('logging', {})),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert SystemSettings to a plain dictionary."""
        return asdict(self)
