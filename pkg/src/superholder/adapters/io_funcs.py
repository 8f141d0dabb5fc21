from __future__ import annotations

import json
from collections.abc import Callable
from enum import Enum
from pathlib import Path
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:  # pragma: no cover
    from typing_extensions import Self

import yaml


class FileType(Enum):
    JSON = "json"
    YAML = "yaml"
    TEXT = "text"

    @classmethod
    def from_str(cls, inp_str: str) -> Self:
        return cls._member_map_[inp_str.strip().upper()]

    @classmethod
    def from_path(cls, path: str | Path) -> Self:
        suffix = Path(path).suffix.lower().removeprefix(".")
        return {"json": cls.JSON, "yaml": cls.YAML, "yml": cls.YAML}.get(suffix, cls.TEXT)


def read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def read_yaml(path: str) -> dict:
    return yaml.safe_load(read_text(path)) or {}


READ_FUNCS = {
    FileType.JSON: read_text,
    FileType.YAML: read_yaml,
    FileType.TEXT: read_text,
}

WriteFn = Callable[[dict | str, str], None]


def write_text(data: str, path: str, **kwargs: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(data, encoding="utf-8", **kwargs)


def write_json(data: dict, path: str, **kwargs: dict) -> None:
    write_text(json.dumps(data, sort_keys=True, indent=2, **kwargs) + "\n", path)


def write_yaml(data: dict, path: str, **kwargs: dict) -> None:
    write_text(yaml.safe_dump(data, sort_keys=True, **kwargs), path)


WRITE_FUNCS = {FileType.JSON: write_json, FileType.YAML: write_yaml, FileType.TEXT: write_text}
