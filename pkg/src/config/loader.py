# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Plain-text ``key=value`` documents: run configs, dataset and checkpoint manifests.

Each non-blank line holds one ``key=value`` pair; ``#`` starts a comment.
Values are parsed as YAML scalars or flow lists, and a value written
``$NAME`` is replaced by the environment variable NAME.
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import yaml

from src.errors import ConfigError


@dataclass(frozen=True)
class ConfigEntry:
    key: str
    raw: str
    line: Optional[int]
    source: str

    def location(self) -> str:
        if self.line is None:
            return self.source
        return f"{self.source}:{self.line}"


def replace_env_vars(value: str) -> str:
    """Replace environment variables in string values."""
    if not isinstance(value, str):
        return value
    if value.startswith("$"):
        env_var = value[1:]
        return os.getenv(env_var, env_var)
    return value


def parse_value(entry: ConfigEntry) -> Any:
    """Decode one raw value (after env substitution) with yaml.safe_load."""
    text = replace_env_vars(entry.raw)
    if text == "":
        return None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(
            f"cannot parse value {entry.raw!r} for {entry.key}: {e}",
            key=entry.key,
            line=entry.line,
        ) from e


def _strip_comment(line: str) -> str:
    # A '#' inside quotes is kept.
    quote = None
    for i, ch in enumerate(line):
        if ch in "\"'":
            quote = None if quote == ch else (quote or ch)
        elif ch == "#" and quote is None:
            return line[:i]
    return line


def parse_key_values(text: str, source: str = "<string>") -> Dict[str, ConfigEntry]:
    """Split a key=value document into entries keyed by name."""
    entries: Dict[str, ConfigEntry] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = _strip_comment(line).strip()
        if not stripped:
            continue
        key, sep, raw = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {line.strip()!r}", line=number)
        if key in entries:
            raise ConfigError(
                f"duplicate key {key} (first set on line {entries[key].line})",
                key=key,
                line=number,
            )
        entries[key] = ConfigEntry(key=key, raw=raw.strip(), line=number, source=source)
    return entries


def parse_overrides(items: Iterable[str]) -> Dict[str, ConfigEntry]:
    """Parse ``--set key=value`` flags; later flags win."""
    entries: Dict[str, ConfigEntry] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        entries[key] = ConfigEntry(key=key, raw=raw.strip(), line=None, source="--set")
    return entries


def process_dict(entries: Dict[str, ConfigEntry]) -> Dict[str, Any]:
    """Parse every value and nest dotted keys into dictionaries."""
    result: Dict[str, Any] = {}
    for key, entry in entries.items():
        node = result
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(
                    f"{key} conflicts with scalar key {part}", key=key, line=entry.line
                )
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"{key} conflicts with its own sub-keys", key=key, line=entry.line)
        node[parts[-1]] = parse_value(entry)
    return result


_config_cache: Dict[tuple, Dict[str, ConfigEntry]] = {}


def load_key_value_file(file_path: Union[str, Path]) -> Dict[str, ConfigEntry]:
    """Read and parse a key=value file, caching by path and modification time."""
    path = Path(file_path)
    if not path.exists():
        raise ConfigError(f"configuration file {path} does not exist")
    stat = path.stat()
    cache_key = (str(path.resolve()), stat.st_mtime_ns, stat.st_size)
    if cache_key in _config_cache:
        return _config_cache[cache_key]
    entries = parse_key_values(path.read_text(encoding="utf-8"), source=str(path))
    _config_cache[cache_key] = entries
    return entries
