# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Iterable, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError

from src.config.loader import (
    ConfigEntry,
    load_key_value_file,
    parse_key_values,
    parse_overrides,
    process_dict,
)
from src.errors import ConfigError
from src.heads.builder import HeadConfig
from src.nn.backbone import BackboneConfig

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "resolved_config.txt"


def get_output_root(default: str = "runs") -> Path:
    """Root directory for relative output_dir values (DAP_OUTPUT_ROOT)."""
    return Path(os.getenv("DAP_OUTPUT_ROOT", default))


class OptimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base_lr: float = Field(default=0.1, gt=0.0)
    factor: float = Field(default=10.0, ge=1.0, description="lr divisor per interval")
    interval: int = Field(default=10, ge=1, description="epochs between decays")
    momentum: float = Field(default=0.0, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=0.0, ge=0.0)
    lambda_lr: Optional[float] = Field(
        default=None, ge=0.0, description="lambda step size; follows the lr schedule when unset"
    )


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(default=30, ge=1)
    batch_size: int = Field(default=64, ge=1)
    seed: int = Field(default=0, ge=0)
    checkpoint_every: int = Field(
        default=0, ge=0, description="epochs between checkpoints; 0 writes only the final one"
    )
    eval_every: int = Field(default=1, ge=1)
    workers: int = Field(default=0, ge=0, description="batch prefetch threads")


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    train_manifest: Optional[str] = None
    test_manifest: Optional[str] = None


class RunConfig(BaseModel):
    """Everything a training run needs, resolved from a key=value document."""

    model_config = ConfigDict(extra="forbid")

    backbone: BackboneConfig = Field(default_factory=BackboneConfig)
    head: HeadConfig = Field(default_factory=HeadConfig)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    output_dir: str = "run"

    _entries: dict[str, ConfigEntry] = PrivateAttr(default_factory=dict)

    @classmethod
    def from_entries(
        cls,
        entries: dict[str, ConfigEntry],
        overrides: Optional[dict[str, ConfigEntry]] = None,
    ) -> "RunConfig":
        merged = dict(entries)
        merged.update(overrides or {})
        values = process_dict(merged)
        try:
            config = cls.model_validate(values)
        except ValidationError as e:
            raise _to_config_error(e, merged) from None
        config._entries = merged
        return config

    @classmethod
    def from_text(cls, text: str, overrides: Iterable[str] = ()) -> "RunConfig":
        return cls.from_entries(parse_key_values(text), parse_overrides(overrides))

    def entry(self, key: str) -> Optional[ConfigEntry]:
        return self._entries.get(key)

    def config_error(self, key: str, message: str) -> ConfigError:
        entry = self.entry(key)
        return ConfigError(
            f"{key}: {message}", key=key, line=entry.line if entry else None
        )

    def flatten(self) -> dict[str, Any]:
        return _flatten(self.model_dump(mode="json"))

    def resolved_text(self) -> str:
        lines = [f"{key}={json.dumps(value)}" for key, value in self.flatten().items()]
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.resolved_text().encode("utf-8")).hexdigest()

    def output_path(self) -> Path:
        path = Path(self.output_dir)
        return path if path.is_absolute() else get_output_root() / path

    def write_resolved(self, directory: Union[str, Path]) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / RESOLVED_CONFIG_NAME
        target.write_text(self.resolved_text(), encoding="utf-8")
        return target


def _flatten(values: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in values.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, prefix=f"{name}."))
        else:
            flat[name] = value
    return flat


def _to_config_error(error: ValidationError, entries: dict[str, ConfigEntry]) -> ConfigError:
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"])
    entry = entries.get(key)
    if entry is None:
        # Errors on a nested model point at its section; find any key inside it.
        entry = next((e for k, e in entries.items() if k.startswith(f"{key}.")), None)
    if first["type"] == "extra_forbidden":
        message = f"unknown key {key}"
    else:
        message = f"{key}: {first['msg']}"
    if entry is not None and entry.line is None:
        message = f"{message} (from --set)"
    return ConfigError(message, key=key, line=entry.line if entry else None)


def load_run_config(
    path: Union[str, Path], overrides: Iterable[str] = ()
) -> RunConfig:
    """Load a run config file, apply ``--set`` overrides and validate it."""
    config = RunConfig.from_entries(load_key_value_file(path), parse_overrides(overrides))
    logger.info(f"Loaded run config {path} (hash {config.config_hash()[:12]})")
    return config
