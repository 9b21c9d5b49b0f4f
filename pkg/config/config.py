"""
Configuration management for the diversity actor-critic experiments.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from decouple import config
from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from utils.errors import ConfigurationError

ALPHA_MIN = 0.5
ALPHA_MAX = 0.99


class DacHyper(BaseModel):
    """Learner hyperparameters. Defaults follow the published setup for non-physics tasks."""
    alpha_mode: Literal["fixed", "adaptive"] = "fixed"
    alpha: float = 0.5
    beta: float = 0.2
    gamma: float = 0.99
    learning_rate: float = 3e-4
    batch_size: int = 256
    tau: float = 0.005
    horizon: int = 1000
    ratio_clip: float = 1e-4
    action_dim: int = 1
    clip_bound: Optional[float] = None
    control_coefficient: Optional[float] = None
    alpha_min: float = ALPHA_MIN
    alpha_max: float = ALPHA_MAX
    alpha_regularization: float = 1e-3
    hidden_sizes: List[int] = [256, 256]
    squash: bool = True
    action_scale: float = 1.0
    n_prime: Optional[int] = None
    buffer_capacity: int = 1_000_000
    start_steps: int = 0
    eval_interval: int = 5000
    eval_episodes: int = 1
    log_interval: int = 1000

    @field_validator("alpha")
    @classmethod
    def _alpha_in_unit_interval(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {value}")
        return value

    @field_validator("beta", "learning_rate")
    @classmethod
    def _strictly_positive(cls, value: float) -> float:
        if value <= 0.0:
            raise ValueError(f"must be > 0, got {value}")
        return value

    @field_validator("gamma")
    @classmethod
    def _discount(cls, value: float) -> float:
        if not 0.0 <= value < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {value}")
        return value

    @field_validator("tau")
    @classmethod
    def _smoothing(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {value}")
        return value

    @field_validator("ratio_clip")
    @classmethod
    def _ratio_clip(cls, value: float) -> float:
        if not 0.0 < value < 0.5:
            raise ValueError(f"ratio_clip must lie in (0, 0.5), got {value}")
        return value

    @field_validator("batch_size", "horizon", "action_dim", "buffer_capacity", "eval_interval", "log_interval")
    @classmethod
    def _positive_int(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"must be >= 1, got {value}")
        return value

    @field_validator("n_prime")
    @classmethod
    def _window(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < 1:
            raise ValueError(f"n_prime must be >= 1, got {value}")
        return value

    @model_validator(mode="after")
    def _fill_action_defaults(self) -> "DacHyper":
        # derived values stay out of model_fields_set so for_env can re-derive them
        if self.clip_bound is None:
            object.__setattr__(self, "clip_bound", float(self.action_dim))
        if self.control_coefficient is None:
            object.__setattr__(self, "control_coefficient", -2.0 * self.action_dim)
        if not 0.0 < self.alpha_min < self.alpha_max < 1.0:
            raise ValueError("alpha range must satisfy 0 < alpha_min < alpha_max < 1")
        if self.n_prime is not None and self.n_prime > self.buffer_capacity:
            raise ValueError("n_prime cannot exceed buffer_capacity")
        return self

    @property
    def adaptive(self) -> bool:
        return self.alpha_mode == "adaptive"

    def for_env(self, action_dim: int, **updates: Any) -> "DacHyper":
        """
        Copy for an environment with the given action dimension.

        Fields that were derived from action_dim (clip bound, control
        coefficient) are derived again unless they were set explicitly.
        """
        data = self.model_dump(include=self.model_fields_set)
        data.update(action_dim=action_dim, **updates)
        return DacHyper(**data)


class DpiConfig(BaseModel):
    """Controls for exact tabular diverse policy iteration."""
    alpha: float = 0.5
    beta: float = 1.0
    improvement_mode: Literal["closed_form", "exact_simplex"] = "closed_form"
    tol: float = 1e-9
    max_iters: int = 200
    monotone_tol: float = 1e-8

    @field_validator("alpha")
    @classmethod
    def _alpha_in_unit_interval(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {value}")
        return value

    @field_validator("beta", "tol", "monotone_tol")
    @classmethod
    def _strictly_positive(cls, value: float) -> float:
        if value <= 0.0:
            raise ValueError(f"must be > 0, got {value}")
        return value

    @field_validator("max_iters")
    @classmethod
    def _iterations(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"max_iters must be >= 1, got {value}")
        return value


class MazeConfig(BaseModel):
    """Geometry of the continuous four-room maze."""
    side: float = 100.0
    wall_thickness: float = 1.0
    door_width: float = 4.0
    start: List[float] = [0.5, 0.5]
    horizon: int = 1000
    gamma: float = 0.999
    skin: float = 1e-3
    normalize_observations: bool = True

    @model_validator(mode="after")
    def _geometry(self) -> "MazeConfig":
        half = self.side / 2.0
        if self.side <= 0 or self.wall_thickness <= 0:
            raise ValueError("side and wall_thickness must be positive")
        if not 0.0 < self.door_width < half:
            raise ValueError(f"door_width must lie in (0, {half}), got {self.door_width}")
        if len(self.start) != 2:
            raise ValueError("start must be a 2-D point")
        x, y = self.start
        if not (0.0 < x < half and 0.0 < y < half):
            raise ValueError(f"start {self.start} is not inside the lower-left room")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        return self


class RunConfig(BaseModel):
    """One command-line invocation, after merging the manifest file and flags."""
    command: Literal["tabular-dpi", "maze-explore", "train", "toy", "verify"]
    env_name: str = "maze"
    agent: Literal["dac", "sac"] = "dac"
    hyper: DacHyper = DacHyper()
    dpi: DpiConfig = DpiConfig()
    maze: MazeConfig = MazeConfig()
    seeds: List[int] = [0]
    total_steps: int = 50_000
    checkpoint_steps: List[int] = [5_000, 50_000, 300_000]
    output_dir: Path = Path("runs")
    variants: List[float] = [0.5, 1.0, 0.0]
    mdp_path: Optional[Path] = None
    n_actions: int = 10
    delay: int = 20

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("seeds must be nonempty")
        return value

    @field_validator("total_steps")
    @classmethod
    def _steps(cls, value: int) -> int:
        if value < 0:
            raise ValueError(f"total_steps must be >= 0, got {value}")
        return value

    @field_validator("n_actions")
    @classmethod
    def _toy_actions(cls, value: int) -> int:
        if value < 2:
            raise ValueError(f"n_actions must be >= 2, got {value}")
        return value


class SystemConfig(BaseSettings):
    """Process-level settings read from the environment or a .env file."""
    debug_mode: bool = config('DEBUG_MODE', default=False, cast=bool)
    log_level: str = config('LOG_LEVEL', default='INFO')
    max_concurrent_tasks: int = config('MAX_CONCURRENT_TASKS', default=3, cast=int)
    output_dir: str = config('DAC_OUTPUT_DIR', default='runs')

    model_config = SettingsConfigDict(env_file='.env', env_file_encoding='utf-8', extra='ignore')


def load_config() -> SystemConfig:
    """Load and return the system configuration."""
    try:
        return SystemConfig()
    except ValidationError as e:
        raise ConfigurationError(f"System configuration failed: {e}") from e


_SECTIONS = {
    "hyper": DacHyper,
    "dpi": DpiConfig,
    "maze": MazeConfig,
}

_LIST_KEYS = {"seeds", "checkpoint_steps", "variants", "hidden_sizes", "start"}


def _coerce(key: str, raw: Any) -> Any:
    if raw is None:
        return None
    if isinstance(raw, str) and key in _LIST_KEYS:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def read_manifest(path: Path) -> Dict[str, Any]:
    """
    Read a key=value experiment manifest.

    Args:
        path: Manifest file path

    Returns:
        Flat mapping of keys to raw string values
    """
    if not Path(path).is_file():
        raise ConfigurationError(f"Manifest not found: {path}")
    return {key: value for key, value in dotenv_values(path).items() if value is not None}


def build_run_config(command: str, file_values: Dict[str, Any], flag_values: Dict[str, Any]) -> RunConfig:
    """
    Merge manifest values and command-line flags into a validated RunConfig.

    Flags win over file values. Keys belonging to DacHyper, DpiConfig or
    MazeConfig are routed to their section; "dpi_alpha" style prefixes are
    accepted to disambiguate fields shared between sections.

    Args:
        command: Subcommand name
        file_values: Values read from the manifest
        flag_values: Values given on the command line (None means unset)

    Returns:
        Validated RunConfig
    """
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})

    top: Dict[str, Any] = {"command": command}
    sections: Dict[str, Dict[str, Any]] = {name: {} for name in _SECTIONS}
    for key, raw in merged.items():
        value = _coerce(key, raw)
        routed = False
        for name, model in _SECTIONS.items():
            prefix = f"{name}_"
            if key.startswith(prefix) and key[len(prefix):] in model.model_fields:
                sections[name][key[len(prefix):]] = value
                routed = True
                break
        if routed:
            continue
        if key in RunConfig.model_fields:
            top[key] = value
            continue
        for name, model in _SECTIONS.items():
            if key in model.model_fields:
                sections[name][key] = value
                routed = True
                break
        if not routed:
            raise ConfigurationError(f"Unknown configuration key: {key}")

    try:
        for name, model in _SECTIONS.items():
            top[name] = model(**sections[name])
        return RunConfig(**top)
    except ValidationError as e:
        raise ConfigurationError(f"Configuration validation failed: {e}") from e
