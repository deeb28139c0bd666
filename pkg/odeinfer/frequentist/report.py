"""Estimate report module.

頻度論的推定量の結果 EstimateReport と, その key=value 形式のレコード.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import DatasetParseError


def format_value(value: Any) -> str:
    """レコード用に値を文字列にする. 浮動小数点数は 17 桁."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, np.ndarray):
        return ",".join(format_value(v) for v in value.reshape(-1))
    if isinstance(value, Sequence) and not isinstance(value, str):
        return ",".join(format_value(v) for v in value)
    return str(value)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",")) if text else ()


@dataclass(frozen=True)
class EstimateReport:
    """推定結果.

    Attributes:
        method: 手法名.
        theta_hat: 推定パラメータ.
        x0_hat: 推定初期状態 (推定しない手法では曲線の t1 での値).
        objective: 最終的な規準値.
        runtime: 実行時間 [s].
        iterations: 反復回数 (手法ごとの意味は details 参照).
        converged: 収束フラグ.
        lam: 選択した/使用した λ.
        details: 手法固有の診断情報.
    """

    method: str
    theta_hat: tuple[float, ...]
    x0_hat: tuple[float, ...] | None
    objective: float
    runtime: float
    iterations: int
    converged: bool
    lam: float | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> str:
        """key=value 形式の行にする."""
        items: list[tuple[str, Any]] = [
            ("method", self.method),
            ("theta_hat", self.theta_hat),
        ]
        if self.x0_hat is not None:
            items.append(("x0_hat", self.x0_hat))
        items += [
            ("objective", float(self.objective)),
            ("runtime", float(self.runtime)),
            ("iterations", int(self.iterations)),
            ("converged", bool(self.converged)),
        ]
        if self.lam is not None:
            items.append(("lambda", float(self.lam)))
        items += [(f"detail.{key}", value) for key, value in self.details.items()]
        return "".join(f"{key}={format_value(value)}\n" for key, value in items)

    @classmethod
    def from_record(cls, text: str) -> "EstimateReport":
        """to_record の出力から復元する. details の値は文字列のまま.

        Raises:
            DatasetParseError: 行の形式が不正な場合.
        """
        values: dict[str, str] = {}
        details: dict[str, Any] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DatasetParseError(f"key=value 形式ではありません: '{line}'", number)
            if key.startswith("detail."):
                details[key.removeprefix("detail.")] = value
            else:
                values[key] = value
        try:
            return cls(
                method=values["method"],
                theta_hat=_floats(values["theta_hat"]),
                x0_hat=_floats(values["x0_hat"]) if "x0_hat" in values else None,
                objective=float(values["objective"]),
                runtime=float(values["runtime"]),
                iterations=int(values["iterations"]),
                converged=values["converged"] == "true",
                lam=float(values["lambda"]) if "lambda" in values else None,
                details=details,
            )
        except (KeyError, ValueError) as e:
            raise DatasetParseError(f"レコードが不正です: {e}", 1) from e

    def save(self, path: str | Path) -> Path:
        """レコードをファイルに書き出す."""
        path = Path(path)
        path.write_text(self.to_record(), encoding="utf-8")
        return path
