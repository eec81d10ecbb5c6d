"""Information-cost fault detection for multi-spacecraft inspection."""

from .config import ConfigError, ScenarioConfig, load_builtin, load_config
from .report import RunReport, write_report
from .simulation import run

__all__ = [
    "ConfigError",
    "RunReport",
    "ScenarioConfig",
    "load_builtin",
    "load_config",
    "run",
    "write_report",
]
__version__ = "0.1.0"
