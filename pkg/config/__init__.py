"""
Configuration models and loaders.
"""

from .config import (
    ALPHA_MAX,
    ALPHA_MIN,
    DacHyper,
    DpiConfig,
    MazeConfig,
    RunConfig,
    SystemConfig,
    build_run_config,
    load_config,
    read_manifest,
)

__all__ = [
    "ALPHA_MAX",
    "ALPHA_MIN",
    "DacHyper",
    "DpiConfig",
    "MazeConfig",
    "RunConfig",
    "SystemConfig",
    "build_run_config",
    "load_config",
    "read_manifest",
]
