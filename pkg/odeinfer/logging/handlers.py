"""Logging handlers module.

推定ログのフォーマッターとハンドラー. 端末には色付き, 実行ディレクトリの
ログファイルには色なしで同じ書式を出す.
"""

import logging
import sys
from pathlib import Path
from typing import TextIO

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

LEVEL_COLORS = {
    logging.DEBUG: "\033[36m",
    logging.INFO: "\033[32m",
    logging.WARNING: "\033[33m",
    logging.ERROR: "\033[31m",
    logging.CRITICAL: "\033[35m",
}
RESET = "\033[0m"


class LevelFormatter(logging.Formatter):
    """レベル名を任意で色付けするフォーマッター.

    Args:
        colored: True ならレベル名を ANSI カラーで囲む.
    """

    def __init__(self, colored: bool = False) -> None:
        """LevelFormatterを初期化."""
        super().__init__(LOG_FORMAT, DATE_FORMAT)
        self.colored = colored

    def format(self, record: logging.LogRecord) -> str:
        """ログレコードをフォーマット. レコード自体は書き換えない."""
        if not self.colored:
            return super().format(record)
        original = record.levelname
        record.levelname = f"{LEVEL_COLORS.get(record.levelno, '')}{original}{RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def _is_terminal(stream: TextIO) -> bool:
    isatty = getattr(stream, "isatty", None)
    return bool(isatty and isatty())


def create_console_handler(
    level: int = logging.INFO,
    stream: TextIO | None = None,
    colored: bool | None = None,
) -> logging.StreamHandler:
    """コンソールハンドラーを生成.

    標準出力は CLI が書き出したパスの表示に使うので, 既定の出力先は標準エラー.

    Args:
        level: ログレベル.
        stream: 出力先. Noneの場合は sys.stderr.
        colored: 色付けするか. Noneの場合は出力先が端末のときだけ.

    Returns:
        設定済みのStreamHandler.
    """
    stream = stream if stream is not None else sys.stderr
    handler = logging.StreamHandler(stream)
    handler.setLevel(level)
    handler.setFormatter(
        LevelFormatter(_is_terminal(stream) if colored is None else colored)
    )
    return handler


def create_file_handler(
    log_path: Path, level: int = logging.INFO
) -> logging.FileHandler:
    """実行ログのファイルハンドラーを生成. 親ディレクトリがなければ作る."""
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_path, encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(LevelFormatter(colored=False))
    return handler
