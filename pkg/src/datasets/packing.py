# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Pack raw data into manifests + blobs.

A pack spec is a key=value document, for example::

    source=synthetic
    num_classes=4
    train_per_class=500
    test_per_class=100
    resolution=16
    seed=7

or, for data prepared elsewhere::

    source=directory
    num_classes=10
    train_dir=raw/train
    test_dir=raw/test

A directory source holds one ``.npy`` array [n x ch x h x w] of raw [0, 1]
pixels per class; files are taken in sorted name order and the i-th file
becomes class i.
"""

import logging
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.config.loader import load_key_value_file, process_dict
from src.datasets.image_set import (
    LabeledImageSet,
    compute_channel_stats,
    save_dataset,
    with_stats,
)
from src.datasets.synthetic import make_synthetic
from src.errors import ConfigError, FormatError

logger = logging.getLogger(__name__)

TRAIN_MANIFEST = "train.manifest"
TEST_MANIFEST = "test.manifest"


class PackSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    source: Literal["synthetic", "directory"] = "synthetic"
    num_classes: int = Field(default=4, ge=2)
    standardize: bool = Field(default=True, description="record train-split mean/std")

    # synthetic
    train_per_class: int = Field(default=500, ge=1)
    test_per_class: int = Field(default=100, ge=1)
    resolution: int = Field(default=16, ge=2)
    channels: int = Field(default=1, ge=1)
    noise: float = Field(default=0.1, ge=0.0)
    seed: int = Field(default=0, ge=0)

    # directory
    train_dir: Optional[str] = None
    test_dir: Optional[str] = None


def load_pack_spec(path: Union[str, Path]) -> PackSpec:
    entries = load_key_value_file(path)
    try:
        return PackSpec.model_validate(process_dict(entries))
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        entry = entries.get(key)
        raise ConfigError(
            f"{key}: {first['msg']}", key=key, line=entry.line if entry else None
        ) from None


def _read_class_dir(directory: Path, num_classes: int, split: str) -> LabeledImageSet:
    if not directory.is_dir():
        raise FormatError("class directory is missing", path=str(directory))
    files = sorted(directory.glob("*.npy"))
    if len(files) != num_classes:
        raise FormatError(
            f"spec declares {num_classes} classes but {len(files)} class files were found",
            path=str(directory),
        )
    images, labels = [], []
    for label, file in enumerate(files):
        try:
            array = np.load(file, allow_pickle=False)
        except (ValueError, OSError) as e:
            raise FormatError(f"cannot read class array: {e}", path=str(file)) from e
        if array.ndim != 4:
            raise FormatError(f"expected [n x ch x h x w], got {array.shape}", path=str(file))
        if images and array.shape[1:] != images[0].shape[1:]:
            raise FormatError(
                f"class array {array.shape[1:]} differs from {images[0].shape[1:]}",
                path=str(file),
            )
        images.append(np.asarray(array, dtype=np.float64))
        labels.append(np.full(array.shape[0], label, dtype=np.int64))
    return LabeledImageSet(
        images=np.concatenate(images),
        labels=np.concatenate(labels),
        num_classes=num_classes,
        split=split,
    )


def build_splits(spec: PackSpec) -> tuple[LabeledImageSet, LabeledImageSet]:
    if spec.source == "synthetic":
        common = dict(
            num_classes=spec.num_classes,
            resolution=spec.resolution,
            channels=spec.channels,
            noise=spec.noise,
            seed=spec.seed,
        )
        train = make_synthetic(samples_per_class=spec.train_per_class, split="train", **common)
        test = make_synthetic(samples_per_class=spec.test_per_class, split="test", **common)
        return train, test

    for key in ("train_dir", "test_dir"):
        if getattr(spec, key) is None:
            raise ConfigError(f"{key} is required for source=directory", key=key)
    train = _read_class_dir(Path(spec.train_dir), spec.num_classes, "train")
    test = _read_class_dir(Path(spec.test_dir), spec.num_classes, "test")
    if train.images.shape[1:] != test.images.shape[1:]:
        raise FormatError(
            f"train images {train.images.shape[1:]} and test images "
            f"{test.images.shape[1:]} differ",
            path=spec.test_dir,
        )
    return train, test


def pack_dataset(spec: PackSpec, output_dir: Union[str, Path]) -> tuple[Path, Path]:
    """Write train/test manifests and blobs; returns the two manifest paths."""
    output_dir = Path(output_dir)
    train, test = build_splits(spec)
    if spec.standardize:
        mean, std = compute_channel_stats(train.images)
        train = with_stats(train, mean, std)
        test = with_stats(test, mean, std)
    train_path = save_dataset(train, output_dir / TRAIN_MANIFEST)
    test_path = save_dataset(test, output_dir / TEST_MANIFEST)
    logger.info(
        f"Packed {spec.source} data into {output_dir}: "
        f"{len(train)} train / {len(test)} test images"
    )
    return train_path, test_path
