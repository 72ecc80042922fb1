# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Checkpoints: a key=value manifest plus one tensor blob per parameter/buffer.

Tensor names are prefixed ``backbone.``, ``head.`` (all W_i and the
lambda buffer included) and ``velocity.`` for momentum state.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.datasets.tensor_format import load_tensor, read_manifest, save_tensor, write_manifest
from src.errors import FormatError
from src.heads.dap import ClassifierHead
from src.nn.module import Module
from src.training.optimizer import OptimizerState

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = "DAPCKPT"
CHECKPOINT_VERSION = 1
MANIFEST_NAME = "checkpoint.manifest"


@dataclass
class CheckpointInfo:
    path: Path
    epoch: int
    seed: int
    config_hash: str
    head_kind: str
    lr: float

    @property
    def resolved_config(self) -> Path:
        return self.path / "resolved_config.txt"


def _collect(
    backbone: Module, head: ClassifierHead, optimizer: Optional[OptimizerState]
) -> dict[str, np.ndarray]:
    tensors = {f"backbone.{k}": v for k, v in backbone.state_dict().items()}
    tensors.update({f"head.{k}": v for k, v in head.state_dict().items()})
    if optimizer is not None:
        tensors.update({f"velocity.{k}": v for k, v in optimizer.velocity.items()})
    return tensors


def save_checkpoint(
    directory: Union[str, Path],
    backbone: Module,
    head: ClassifierHead,
    optimizer: Optional[OptimizerState],
    epoch: int,
    seed: int,
    config_hash: str,
    resolved_config: Optional[str] = None,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tensors = _collect(backbone, head, optimizer)
    for name, value in tensors.items():
        save_tensor(directory / f"{name}.bin", value)
    if resolved_config is not None:
        (directory / "resolved_config.txt").write_text(resolved_config, encoding="utf-8")

    write_manifest(
        directory / MANIFEST_NAME,
        {
            "magic": CHECKPOINT_MAGIC,
            "version": CHECKPOINT_VERSION,
            "epoch": epoch,
            "seed": seed,
            "config_hash": config_hash,
            "head_kind": head.kind.value,
            "lr": float(optimizer.lr) if optimizer is not None else 0.0,
            "tensors": list(tensors),
        },
    )
    logger.info(f"Checkpoint epoch {epoch} written to {directory} ({len(tensors)} tensors)")
    return directory


def read_checkpoint_info(directory: Union[str, Path]) -> tuple[CheckpointInfo, list[str]]:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    manifest = read_manifest(manifest_path)
    where = str(manifest_path)
    if manifest.get("magic") != CHECKPOINT_MAGIC:
        raise FormatError(f"bad checkpoint magic {manifest.get('magic')!r}", path=where)
    if manifest.get("version") != str(CHECKPOINT_VERSION):
        raise FormatError(f"unsupported checkpoint version {manifest.get('version')}", path=where)
    try:
        info = CheckpointInfo(
            path=directory,
            epoch=int(manifest["epoch"]),
            seed=int(manifest["seed"]),
            config_hash=manifest["config_hash"],
            head_kind=manifest["head_kind"],
            lr=float(manifest["lr"]),
        )
    except (KeyError, ValueError) as e:
        raise FormatError(f"malformed checkpoint manifest: {e}", path=where) from e
    names = [n for n in manifest.get("tensors", "").split(",") if n]
    return info, names


def load_checkpoint(
    directory: Union[str, Path],
    backbone: Module,
    head: ClassifierHead,
    optimizer: Optional[OptimizerState] = None,
) -> CheckpointInfo:
    """Restore parameters, buffers and optimizer state in place."""
    info, names = read_checkpoint_info(directory)
    if info.head_kind != head.kind.value:
        raise FormatError(
            f"checkpoint holds a {info.head_kind} head, model has {head.kind.value}",
            path=str(info.path),
        )
    tensors = {name: load_tensor(info.path / f"{name}.bin") for name in names}
    sections: dict[str, dict[str, np.ndarray]] = {"backbone": {}, "head": {}, "velocity": {}}
    for name, value in tensors.items():
        section, _, rest = name.partition(".")
        if section not in sections:
            raise FormatError(f"unknown checkpoint tensor {name}", path=str(info.path))
        sections[section][rest] = value

    backbone.load_state_dict(sections["backbone"])
    head.load_state_dict(sections["head"])
    if optimizer is not None:
        optimizer.velocity = sections["velocity"]
        optimizer.lr = info.lr
    logger.info(f"Loaded checkpoint {info.path} (epoch {info.epoch})")
    return info
