"""Errors module.

odeinfer が送出する例外と警告の定義.

各例外は組み込み例外も継承するため, ``ValueError`` などで捕捉できる.
メッセージは1行にまとめ, CLI がそのまま表示できるようにする.
"""

from typing import Any

import numpy as np


class OdeInferError(Exception):
    """odeinfer の例外の基底クラス."""


class InvalidInputError(OdeInferError, ValueError):
    """次元の不一致など, 入力が不正な場合の例外."""


class BoundsError(InvalidInputError):
    """パラメータが宣言された範囲外の場合の例外."""


class DomainError(InvalidInputError):
    """評価時刻が基底の定義区間外の場合の例外."""


class DatasetValidationError(InvalidInputError):
    """データセットの内容が不変条件を満たさない場合の例外."""


class InsufficientSampleError(InvalidInputError):
    """事後サンプル数が不足している場合の例外."""


class DatasetParseError(OdeInferError, ValueError):
    """データセットファイルの構文エラー.

    Args:
        message: エラーメッセージ.
        line: 問題のある行番号 (1始まり).
    """

    def __init__(self, message: str, line: int) -> None:
        """DatasetParseErrorを初期化."""
        super().__init__(f"{message} (line {line})")
        self.line = line


class UnknownNameError(OdeInferError, LookupError):
    """レジストリに未登録の名前が指定された場合の例外."""


class NumericalBlowupError(OdeInferError, ArithmeticError):
    """ベクトル場の評価が非有限値になった場合の例外.

    Args:
        stage: 非有限値が生じた RK4 のステージ (1-4).
        time: ステップ開始時刻.
    """

    def __init__(self, stage: int, time: float) -> None:
        """NumericalBlowupErrorを初期化."""
        super().__init__(f"非有限値を検出: RK4 stage {stage}, t={time:.6g}")
        self.stage = stage
        self.time = time


class ConditioningError(OdeInferError, ArithmeticError):
    """計画行列がランク落ちしている場合の例外.

    Args:
        k: 基底関数の数.
        n: 観測点の数.
    """

    def __init__(self, k: int, n: int) -> None:
        """ConditioningErrorを初期化."""
        super().__init__(
            f"計画行列がランク落ち: 基底数 k={k} に対して観測数 n={n} "
            "(ノット数を減らしてください)"
        )
        self.k = k
        self.n = n


class DegenerateSmootherError(OdeInferError, ArithmeticError):
    """平滑化行列の自由度が観測数以上になった場合の例外."""

    def __init__(self, df: float, n: int) -> None:
        """DegenerateSmootherErrorを初期化."""
        super().__init__(f"平滑化の自由度 df={df:.6g} が観測数 n={n} 以上です")
        self.df = df
        self.n = n


class ConvergenceError(OdeInferError, RuntimeError):
    """反復法が最大反復回数内に収束しなかった場合の例外.

    Args:
        message: エラーメッセージ.
        beta: 最後の反復値.
        grad_norm: 最後の勾配ノルム.
    """

    def __init__(self, message: str, beta: np.ndarray, grad_norm: float) -> None:
        """ConvergenceErrorを初期化."""
        super().__init__(f"{message} (gradient norm {grad_norm:.3e})")
        self.beta = beta
        self.grad_norm = grad_norm


class EstimationFailure(OdeInferError, RuntimeError):
    """全ての開始点 (または λ) で推定が失敗した場合の例外.

    Args:
        message: エラーメッセージ.
        diagnostics: 開始点ごとの診断情報.
    """

    def __init__(self, message: str, diagnostics: list[dict[str, Any]]) -> None:
        """EstimationFailureを初期化."""
        super().__init__(message)
        self.diagnostics = diagnostics


class DegeneracyError(OdeInferError, RuntimeError):
    """粒子フィルタの有効サンプルサイズが崩壊した場合の例外."""

    def __init__(self, time_index: int, ess: float) -> None:
        """DegeneracyErrorを初期化."""
        super().__init__(f"粒子が縮退しました: time index {time_index}, ESS={ess:.3g}")
        self.time_index = time_index
        self.ess = ess


class MixingWarning(UserWarning):
    """MCMC の受理率が低すぎる場合の警告."""
