"""推定設定ファイル (.json, .yaml, .yml) のローダー.

どの形式も「ルートがマッピングの dict」を返す. 値の検証は
ConfigLoaderFacade が Pydantic モデルで行うため, ここでは構文と
ルートの型だけを見る.
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

import yaml


class IConfigLoader(ABC):
    """設定ファイルを上書き用の dict に変換するローダー."""

    #: このローダーが扱う拡張子.
    suffixes: tuple[str, ...] = ()

    def supports(self, path: str) -> bool:
        """拡張子で扱えるファイルか判定する."""
        return path.endswith(self.suffixes)

    @abstractmethod
    def load(self, path: str) -> dict[str, Any]:
        """設定ファイルを読み込む.

        Raises:
            FileNotFoundError: ファイルが存在しない場合.
            ValueError: 構文エラー, またはルートがマッピングでない場合.
        """


def _read_text(path: str) -> str:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"設定ファイルが見つかりません: {path}")
    try:
        return file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValueError(f"設定ファイルの読み込みに失敗: {path} - {e}") from e


def _require_mapping(data: object, path: str) -> dict[str, Any]:
    if not isinstance(data, dict):
        raise ValueError(
            f"設定ファイルのルートはマッピングである必要があります: {path} "
            f"({type(data).__name__})"
        )
    return data


class JsonConfigLoader(IConfigLoader):
    """JSON の推定設定.

    Example:
        >>> JsonConfigLoader().load("settings.json")["optimizer"]["multistart_count"]
        5
    """

    suffixes = (".json",)

    def load(self, path: str) -> dict[str, Any]:
        """JSON を読み込む."""
        text = _read_text(path)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(
                f"JSONの構文エラー: {path} ({e.lineno} 行 {e.colno} 列) - {e.msg}"
            ) from e
        return _require_mapping(data, path)


class YamlConfigLoader(IConfigLoader):
    """YAML の推定設定. 空のファイルは上書きなしとして {} を返す."""

    suffixes = (".yaml", ".yml")

    def load(self, path: str) -> dict[str, Any]:
        """YAML を読み込む."""
        text = _read_text(path)
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ValueError(f"YAMLの構文エラー: {path} - {e}") from e
        if data is None:
            return {}
        return _require_mapping(data, path)
