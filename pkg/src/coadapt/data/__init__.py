"""Bundled example problems: the two-service running example and a five-app Simdex spec."""

from pathlib import Path

_HERE = Path(__file__).parent


def path(name: str) -> Path:
    return _HERE / name


def exists(name: str) -> bool:
    return (_HERE / name).is_file()
