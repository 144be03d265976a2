"""JSON configuration helpers shared by the curvature and scenario loaders."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable


class ConfigError(ValueError):
    """A configuration document is malformed; carries the offending location."""

    def __init__(self, message: str, path: str | None = None, key: str | None = None):
        self.path = path
        self.key = key
        where = " ".join(x for x in (path, f"[{key}]" if key else None) if x)
        super().__init__(f"{where}: {message}" if where else message)


def load_json(path: str | Path) -> Any:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", path=str(p)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}", path=str(p)) from exc


def check_keys(doc: Any, required: Iterable[str], optional: Iterable[str] = (), *, where: str = "") -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"expected a JSON object, got {type(doc).__name__}", path=where or None)
    required, optional = set(required), set(optional)
    for k in sorted(set(doc) - required - optional):
        raise ConfigError("unknown key", path=where or None, key=k)
    for k in sorted(required - set(doc)):
        raise ConfigError("missing required key", path=where or None, key=k)


def as_real(value: Any, *, where: str, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path=where or None, key=key)
    return float(value)


def as_int(value: Any, *, where: str, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path=where or None, key=key)
    return value


def as_vector(value: Any, *, where: str, key: str, length: int | None = None) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError(f"expected a list of numbers, got {type(value).__name__}", path=where or None, key=key)
    out = [as_real(v, where=where, key=f"{key}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(out) != length:
        raise ConfigError(f"expected length {length}, got {len(out)}", path=where or None, key=key)
    return out
