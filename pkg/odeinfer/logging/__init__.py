"""Logging package."""

from .factory import ROOT_LOGGER_NAME, ILoggerFactory, LoggerFactory, qualified_name
from .handlers import LevelFormatter, create_console_handler, create_file_handler

__all__ = [
    "ILoggerFactory",
    "LevelFormatter",
    "LoggerFactory",
    "ROOT_LOGGER_NAME",
    "create_console_handler",
    "create_file_handler",
    "qualified_name",
]
