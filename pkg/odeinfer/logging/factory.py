"""Logging factory module.

'odeinfer' 名前空間のロガー構成. ライブラリのモジュールは
``logging.getLogger(__name__)`` で記録するだけで, ハンドラーは CLI が
ルートの 'odeinfer' ロガーに一度だけ付ける.
"""

import logging
from abc import ABC, abstractmethod
from pathlib import Path

from .handlers import create_console_handler, create_file_handler

ROOT_LOGGER_NAME = "odeinfer"


def qualified_name(name: str) -> str:
    """'odeinfer' 名前空間の外の名前に 'odeinfer.' を前置する."""
    if name == ROOT_LOGGER_NAME or name.startswith(f"{ROOT_LOGGER_NAME}."):
        return name
    return f"{ROOT_LOGGER_NAME}.{name}"


class ILoggerFactory(ABC):
    """ロガー生成のインターフェース. ファサードへの注入点."""

    @abstractmethod
    def create(
        self,
        name: str,
        log_dir: str | Path | None = None,
        level: int = logging.INFO,
    ) -> logging.Logger:
        """コンソールと (log_dir 指定時は) ファイルに出すロガーを返す."""
        ...


class LoggerFactory(ILoggerFactory):
    """ロガー生成の実装クラス.

    同じ (名前, ログディレクトリ, レベル) の組には構成済みのロガーを返す.
    ファイル名はロガー名の '.' を '_' にしたもの (ルートなら odeinfer.log).
    """

    _loggers: dict[str, logging.Logger] = {}

    def create(
        self,
        name: str,
        log_dir: str | Path | None = None,
        level: int = logging.INFO,
    ) -> logging.Logger:
        """ロガーを生成.

        Args:
            name: ロガー名. 'odeinfer' 以外は 'odeinfer.' が前置される.
            log_dir: ログファイル出力先ディレクトリ. Noneの場合はコンソールのみ.
            level: ログレベル.

        Returns:
            設定済みのロガー.
        """
        logger_name = qualified_name(name)
        cache_key = f"{logger_name}:{log_dir}:{level}"
        if cache_key in self._loggers:
            return self._loggers[cache_key]

        logger = logging.getLogger(logger_name)
        logger.setLevel(level)
        # 再構成ではハンドラーを付け直す
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()

        logger.addHandler(create_console_handler(level))
        if log_dir is not None:
            log_path = Path(log_dir) / f"{logger_name.replace('.', '_')}.log"
            logger.addHandler(create_file_handler(log_path, level))

        logger.propagate = False
        self._loggers[cache_key] = logger
        return logger
