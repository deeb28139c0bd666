"""レジストリのインターフェース定義."""

from abc import ABC, abstractmethod
from typing import Any, Callable


class IRegistry(ABC):
    """名前付きファクトリのレジストリの抽象基底クラス.

    デコレータで系のコンストラクタや推定手法を登録し, 名前から呼び出す.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """レジストリ名を返す."""
        pass

    @abstractmethod
    def __contains__(self, name: str) -> bool:
        """名前 (別名を含む) が登録済みかチェックする."""
        pass

    @abstractmethod
    def register(self, name: str, *aliases: str) -> Callable[[Callable], Callable]:
        """ファクトリ登録デコレータを返す.

        Args:
            name: 登録名.
            *aliases: 同じファクトリを指す別名.

        Returns:
            デコレータ関数.
        """
        pass

    @abstractmethod
    def get(self, name: str) -> Callable[..., Any]:
        """登録済みのファクトリを返す.

        Raises:
            UnknownNameError: 未登録の名前が指定された場合.
        """
        pass

    @abstractmethod
    def create(self, name: str, **kwargs: Any) -> Any:
        """名前からファクトリを呼び出す.

        Args:
            name: 登録名.
            **kwargs: ファクトリに渡す引数.

        Returns:
            ファクトリの戻り値.

        Raises:
            UnknownNameError: 未登録の名前が指定された場合.
        """
        pass

    @abstractmethod
    def keys(self) -> list[str]:
        """正式な登録名の一覧を返す (別名は含まない)."""
        pass
