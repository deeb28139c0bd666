"""odeinfer のテスト."""
