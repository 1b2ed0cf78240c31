"""Reliability-driven caching and format selection for UAV-backhauled wireless VR."""

from .config import ScenarioConfig, load_config, parse_config, serialize_config
from .errors import ConfigurationError, DomainError

__all__ = ["ScenarioConfig", "load_config", "parse_config", "serialize_config",
           "ConfigurationError", "DomainError"]
__version__ = "0.1.0"
