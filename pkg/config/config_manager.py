"""
Configuration manager for steinlab experiments.

Loads a declarative experiment file (YAML or JSON), applies environment
overrides and validates it into an ExperimentConfig plus SystemSettings.
"""

import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import structlog
import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.exceptions import ConfigParseError, ConfigValidationError
from .settings import SystemSettings

logger = structlog.get_logger(__name__)

SEED_OVERRIDE_ENV = "STEINLAB_SEED_OVERRIDE"


class TaskType(str, Enum):
    """Kinds of experiment tasks."""
    KERNEL1D = "kernel1d"
    GALERKIN = "galerkin"
    SPECTRAL = "spectral"
    CLT = "clt"
    STABILITY = "stability"


class MeasureDecl(BaseModel):
    """A measure declared by catalog name and parameters."""
    name: str = Field(..., min_length=1)
    params: Union[Dict[str, Any], List[Any]] = Field(default_factory=dict)
    check_ranges: bool = Field(default=True)
    standardize: bool = Field(default=False, description="Whiten before use")

    @field_validator('name')
    @classmethod
    def validate_name(cls, v):
        from measures.catalog import CATALOG
        if v not in CATALOG:
            raise ValueError(f"unknown measure '{v}'; known: {', '.join(sorted(CATALOG))}")
        return v


class TaskDecl(BaseModel):
    """One experiment task bound to a declared measure."""
    type: TaskType
    measure: str = Field(..., min_length=1)
    label: Optional[str] = Field(None, description="Prefix for record labels")
    seed: Optional[int] = Field(None, ge=0)
    params: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(use_enum_values=True)


class ExperimentConfig(BaseModel):
    """Validated declarative part of an experiment file."""
    name: str = Field(default="experiment", min_length=1)
    measures: Dict[str, MeasureDecl] = Field(..., min_length=1)
    tasks: List[TaskDecl] = Field(..., min_length=1)
    settings: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode='after')
    def validate_references(self):
        """Every task must reference a declared measure."""
        for index, task in enumerate(self.tasks):
            if task.measure not in self.measures:
                raise ValueError(f"task {index} ({task.type}) references undeclared measure '{task.measure}'")
        return self


class ConfigManager:
    """Loads and validates experiment configuration files."""

    def __init__(self, env_file: Optional[str] = None):
        """Initialize the configuration manager.

        Args:
            env_file: Optional dotenv file; the default search applies when omitted
        """
        load_dotenv(env_file)
        self.config_path: Optional[Path] = None
        self.config_data: Dict[str, Any] = {}
        self.experiment: Optional[ExperimentConfig] = None
        self.system_settings: Optional[SystemSettings] = None

    def load(self, config_path: Union[str, Path]) -> ExperimentConfig:
        """Load, override and validate an experiment file.

        Raises:
            ConfigParseError: syntax errors, with line and column
            ConfigValidationError: structurally invalid content
        """
        self.config_path = Path(config_path)
        try:
            text = self.config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigParseError(f"Cannot read config file {self.config_path}: {e}")

        self.config_data = self._parse(text, self.config_path.suffix.lower())
        self._load_env_overrides()

        try:
            self.experiment = ExperimentConfig(**self.config_data)
        except ValidationError as e:
            raise ConfigValidationError(f"Invalid experiment config {self.config_path}: {e}")
        try:
            self.system_settings = SystemSettings.from_dict(self.experiment.settings)
        except (TypeError, ValueError) as e:
            raise ConfigValidationError(f"Invalid settings in {self.config_path}: {e}")

        logger.info("config_loaded", path=str(self.config_path), experiment=self.experiment.name,
                    tasks=len(self.experiment.tasks))
        return self.experiment

    def _parse(self, text: str, suffix: str) -> Dict[str, Any]:
        if suffix == '.json':
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigParseError(f"JSON syntax error: {e.msg}", line=e.lineno, column=e.colno)
        else:
            try:
                data = yaml.safe_load(text)
            except yaml.YAMLError as e:
                mark = getattr(e, 'problem_mark', None)
                problem = getattr(e, 'problem', None) or str(e)
                if mark is not None:
                    raise ConfigParseError(f"YAML syntax error: {problem}", line=mark.line + 1,
                                           column=mark.column + 1)
                raise ConfigParseError(f"YAML syntax error: {problem}")
        if not isinstance(data, dict):
            raise ConfigParseError("Experiment config must be a mapping at the top level", line=1, column=1)
        return data

    def _load_env_overrides(self):
        """Apply STEINLAB_SEED_OVERRIDE to every seed in the configuration."""
        raw = os.getenv(SEED_OVERRIDE_ENV)
        if raw is None or raw.strip() == "":
            return
        try:
            seed = int(raw)
        except ValueError:
            raise ConfigValidationError(f"{SEED_OVERRIDE_ENV} must be an integer, got '{raw}'")

        settings = self.config_data.setdefault('settings', {}) or {}
        self.config_data['settings'] = settings
        for section in ('integration', 'clt'):
            settings.setdefault(section, {})
            settings[section] = dict(settings[section] or {}, seed=seed)
        for task in self.config_data.get('tasks') or []:
            if isinstance(task, dict):
                task['seed'] = seed
                params = task.get('params') or {}
                if 'seed' in params:
                    params['seed'] = seed
        logger.info("seed_override_applied", seed=seed)

    def get(self, key: str, default: Any = None) -> Any:
        """Get a raw configuration value (dot notation supported, e.g. 'settings.clt.t')."""
        value: Any = self.config_data
        try:
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def save_config(self, path: Union[str, Path]) -> bool:
        """Write the effective configuration (after overrides) as YAML."""
        try:
            with open(path, 'w', encoding="utf-8") as f:
                yaml.safe_dump(self.config_data, f, default_flow_style=False, sort_keys=True)
            return True
        except OSError as e:
            logger.error("config_save_failed", path=str(path), error=str(e))
            return False
