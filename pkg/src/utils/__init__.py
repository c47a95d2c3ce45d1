# src/utils/__init__.py
from __future__ import annotations

import json
import logging
import os
from typing import Any, Optional

import yaml

__all__ = ["save_json", "dump_json", "load_config", "setup_logging"]

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(message)s"


def load_config(path: str = "config/config.yaml") -> dict:
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def setup_logging(logfile: Optional[str] = None, level: Any = logging.INFO) -> None:
    """Setup logging configuration"""
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    handlers: list = [logging.StreamHandler()]
    if logfile:
        handlers.append(logging.FileHandler(logfile, encoding="utf-8"))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def dump_json(data: Any, *, indent: int = 2) -> str:
    """Deterministic JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(data, ensure_ascii=False, indent=indent, sort_keys=True) + "\n"


def save_json(path: str, data: Any, *, indent: int = 2, encoding: str = "utf-8") -> str:
    """
    Write JSON atomically (.tmp then replace), creating the directory.
    Output is byte-stable for equal data.
    """
    dirn = os.path.dirname(str(path)) or "."
    os.makedirs(dirn, exist_ok=True)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding=encoding, newline="\n") as f:
        f.write(dump_json(data, indent=indent))
    os.replace(tmp, path)
    return str(path)
