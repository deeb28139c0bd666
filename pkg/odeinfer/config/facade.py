"""設定ローダーのファサード."""

from typing import Any, TypeVar

from pydantic import BaseModel

from odeinfer.config.loaders import IConfigLoader, JsonConfigLoader, YamlConfigLoader

T = TypeVar("T", bound=BaseModel)


def merge_settings(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """ネストした設定 dict を再帰的にマージする.

    Args:
        base: ファイルから読み込んだ設定.
        override: CLI フラグなど優先する設定.

    Returns:
        マージ結果 (入力は変更しない).
    """
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_settings(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigLoaderFacade:
    """推定設定ファイルローダーのファサード.

    拡張子から適切なローダーを選択し, Pydantic モデルで厳格に
    (strict=True) バリデーションする.

    Example:
        >>> facade = ConfigLoaderFacade()
        >>> settings = facade.load("settings.yaml", MethodSettings)
        >>> settings.optimizer.multistart_count
        5
    """

    def __init__(self, loaders: list[IConfigLoader] | None = None) -> None:
        """初期化する.

        Args:
            loaders: 使用するローダーのリスト. None の場合は JSON と YAML.
        """
        self._loaders = loaders or [JsonConfigLoader(), YamlConfigLoader()]

    def load(
        self,
        path: str,
        schema: type[T],
        overrides: dict[str, Any] | None = None,
    ) -> T:
        """設定ファイルを読み込み, 上書きを適用してバリデーションする.

        Args:
            path: 設定ファイルのパス.
            schema: バリデーションに使用する Pydantic モデルクラス.
            overrides: ファイルの値より優先する設定.

        Returns:
            バリデーション済みの設定オブジェクト.

        Raises:
            ValueError: サポートされていない形式の場合, またはバリデーションエラー.
            FileNotFoundError: ファイルが存在しない場合.
        """
        data = merge_settings(self.load_dict(path), overrides or {})
        result: T = schema.model_validate(data, strict=True)
        return result

    def load_dict(self, path: str) -> dict[str, Any]:
        """設定ファイルを読み込み, dict として返す.

        Raises:
            ValueError: サポートされていない形式の場合.
            FileNotFoundError: ファイルが存在しない場合.
        """
        for loader in self._loaders:
            if loader.supports(path):
                return loader.load(path)

        supported = [type(loader).__name__ for loader in self._loaders]
        raise ValueError(
            f"サポートされていない設定ファイル形式: {path} "
            f"(対応ローダー: {supported})"
        )
