"""python -m odeinfer のエントリポイント."""

from .cli import main

if __name__ == "__main__":
    main()
