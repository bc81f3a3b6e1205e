"""Structured seed-file reading (YAML or JSON, decided by suffix)."""
from __future__ import annotations

import json
from pathlib import Path

import yaml

from .errors import ConfigError


def read_structured(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing file: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except Exception as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
