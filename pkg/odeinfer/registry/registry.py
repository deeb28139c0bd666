"""名前付きファクトリのレジストリ実装."""

from typing import Any, Callable

from ..errors import UnknownNameError
from .interfaces import IRegistry


class Registry(IRegistry):
    """名前付きファクトリのレジストリ.

    組み込みの ODE 系, 頻度論的推定量, ベイズサンプラーを名前で引くために使う.

    Args:
        name: レジストリ名（識別用）.

    Examples:
        >>> systems = Registry("systems")
        >>> @systems.register("decay")
        ... def decay(rate: float = 1.0) -> OdeSystem:
        ...     ...
        >>> system = systems.create("decay", rate=0.5)
    """

    def __init__(self, name: str) -> None:
        """Registryを初期化."""
        self._name = name
        self._registry: dict[str, Callable[..., Any]] = {}
        self._aliases: dict[str, str] = {}

    @property
    def name(self) -> str:
        """レジストリ名を返す."""
        return self._name

    def register(self, name: str, *aliases: str) -> Callable[[Callable], Callable]:
        """ファクトリ登録デコレータを返す.

        Args:
            name: 登録名.
            *aliases: 同じファクトリを指す別名.

        Returns:
            デコレータ関数.

        Raises:
            ValueError: 同じ名前が既に登録されている場合.
        """

        def decorator(factory: Callable) -> Callable:
            for key in (name, *aliases):
                if key in self:
                    raise ValueError(f"'{key}' は {self._name} に既に登録されています")
            self._registry[name] = factory
            for alias in aliases:
                self._aliases[alias] = name
            return factory

        return decorator

    def get(self, name: str) -> Callable[..., Any]:
        """登録済みのファクトリを返す.

        Args:
            name: 登録名または別名.

        Returns:
            ファクトリ.

        Raises:
            UnknownNameError: 未登録の名前が指定された場合.
        """
        key = self._aliases.get(name, name)
        if key not in self._registry:
            raise UnknownNameError(
                f"{self._name} に未登録: '{name}'. 利用可能: {self.keys()}"
            )
        return self._registry[key]

    def create(self, name: str, **kwargs: Any) -> Any:
        """名前からファクトリを呼び出す.

        Args:
            name: 登録名または別名.
            **kwargs: ファクトリに渡す引数.

        Returns:
            ファクトリの戻り値.
        """
        return self.get(name)(**kwargs)

    def keys(self) -> list[str]:
        """正式な登録名の一覧を返す."""
        return list(self._registry.keys())

    def __contains__(self, name: str) -> bool:
        """名前 (別名を含む) が登録済みかチェックする."""
        return name in self._registry or name in self._aliases

    def __len__(self) -> int:
        """登録済みファクトリ数を返す."""
        return len(self._registry)
