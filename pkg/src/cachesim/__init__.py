"""Coded caching simulator for multi-antenna downlinks."""
from .model import CacheState, ConfigError, RateResult, SystemConfig

__all__ = ["CacheState", "ConfigError", "RateResult", "SystemConfig"]
__version__ = "0.1.0"
