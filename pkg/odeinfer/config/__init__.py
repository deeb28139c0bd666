"""config - 推定設定ファイル読み込みモジュール."""

from odeinfer.config.facade import ConfigLoaderFacade
from odeinfer.config.loaders import IConfigLoader, JsonConfigLoader, YamlConfigLoader
from odeinfer.config.schemas import (
    ChainConfig,
    FilterConfig,
    MethodSettings,
    OptimizerConfig,
    RunConfig,
    SplineConfig,
)

__all__ = [
    "ChainConfig",
    "ConfigLoaderFacade",
    "FilterConfig",
    "IConfigLoader",
    "JsonConfigLoader",
    "MethodSettings",
    "OptimizerConfig",
    "RunConfig",
    "SplineConfig",
    "YamlConfigLoader",
]
