"""cli - odeinfer コマンドラインインターフェース."""

from .main import main, run
from .parser import build_parser

__all__ = ["build_parser", "main", "run"]
