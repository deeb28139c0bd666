"""提案幅の burnin 中の調整."""

import numpy as np

TARGET_LOW = 0.2
TARGET_HIGH = 0.4


class ScaleAdapter:
    """ブロックごとの提案幅の倍率.

    adapt_interval 回ごとの受理率が 20% 未満なら縮め, 40% を超えれば広げる.
    burnin 以降は倍率を固定する.

    Args:
        interval: 調整間隔.
        initial: 初期倍率.
    """

    def __init__(self, interval: int, initial: float = 1.0) -> None:
        """ScaleAdapterを初期化."""
        self.interval = interval
        self.multiplier = initial
        self._accepted = 0
        self._proposed = 0
        self.total_accepted = 0
        self.total_proposed = 0

    def record(self, accepted: bool, counting: bool) -> None:
        """提案の結果を記録する. counting は burnin 後の受理率に数えるか."""
        self._accepted += int(accepted)
        self._proposed += 1
        if counting:
            self.total_accepted += int(accepted)
            self.total_proposed += 1

    def step(self, iteration: int, burnin: int) -> None:
        """調整間隔ごとに倍率を更新する (burnin 中のみ)."""
        if iteration >= burnin or (iteration + 1) % self.interval != 0:
            return
        rate = self._accepted / max(self._proposed, 1)
        if rate < TARGET_LOW:
            self.multiplier *= 0.6
        elif rate > TARGET_HIGH:
            self.multiplier *= 1.5
        self._accepted = 0
        self._proposed = 0

    @property
    def acceptance_rate(self) -> float:
        """burnin 後の受理率."""
        return self.total_accepted / max(self.total_proposed, 1)


def empirical_cholesky(history: np.ndarray) -> np.ndarray | None:
    """burnin 前半の軌跡から提案共分散のコレスキー因子を作る.

    2.38^2 / d 倍した標本共分散. 軌跡が短いか分解できない場合は None.
    """
    d = history.shape[1]
    moves = np.count_nonzero(np.any(np.diff(history, axis=0) != 0.0, axis=1))
    if history.shape[0] < 10 * d or moves < 5 * d:
        return None
    cov = np.atleast_2d(np.cov(history, rowvar=False))
    cov = cov * (2.38**2 / d) + 1e-12 * np.eye(d)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return None
