"""Timer module.

推定処理の壁時計時間の計測. 計測値は EstimateReport や事後サンプルの
runtime として報告され, 出力の中で唯一再現しない値になる.
"""

import logging
import time
from abc import ABC, abstractmethod
from types import TracebackType

_logger = logging.getLogger(__name__)


class TimerContext:
    """計測区間のコンテキストマネージャー.

    区間を抜けるときに所要時間をログに出す. 正常終了は INFO,
    例外で抜けた場合は WARNING.

    Args:
        name: 区間名 (通常は推定手法名).
        logger: ログ出力先. Noneの場合はモジュールのロガー.

    Examples:
        >>> with TimerContext("two_step") as timer:
        ...     report = run()
        >>> timer.elapsed
        0.0123
    """

    def __init__(self, name: str, logger: logging.Logger | None = None) -> None:
        """TimerContextを初期化."""
        self.name = name
        self._logger = logger if logger is not None else _logger
        self._started: float | None = None
        self._stopped: float | None = None

    def __enter__(self) -> "TimerContext":
        """計測を開始."""
        self._started = time.perf_counter()
        self._stopped = None
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        """計測を止めてログ出力."""
        self._stopped = time.perf_counter()
        if exc_type is None:
            self._logger.info(f"{self.name}: {self.elapsed:.3f}s")
        else:
            self._logger.warning(
                f"{self.name} ({exc_type.__name__} で中断): {self.elapsed:.3f}s"
            )

    @property
    def elapsed(self) -> float:
        """経過秒数. 計測中は開始からの時間, 開始前は 0."""
        if self._started is None:
            return 0.0
        end = self._stopped if self._stopped is not None else time.perf_counter()
        return end - self._started


class ITimerFactory(ABC):
    """タイマー生成のインターフェース. ファサードへの注入点."""

    @abstractmethod
    def create(self, name: str, logger: logging.Logger | None = None) -> TimerContext:
        """区間名 name のタイマーを返す."""
        ...


class TimerFactory(ITimerFactory):
    """TimerContext を返す既定の実装."""

    def create(self, name: str, logger: logging.Logger | None = None) -> TimerContext:
        """区間名 name のタイマーを返す."""
        return TimerContext(name, logger=logger)
