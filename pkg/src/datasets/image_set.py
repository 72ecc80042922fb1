# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Labeled image sets and their manifest + blob representation.

A dataset manifest looks like::

    magic=DAPSET
    version=1
    split=train
    dtype=float64
    shape=2000,1,16,16
    num_classes=4
    mean=0.5
    std=0.25
    images=train_images.bin
    labels=train_labels.bin

Blobs hold raw pixel values in [0, 1]; ``load_dataset`` standardizes them
per channel with the recorded mean/std (identity when absent).
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from src.datasets.tensor_format import (
    HEADER_SIZE,
    load_tensor,
    parse_float_list,
    parse_int_list,
    read_manifest,
    save_tensor,
    write_manifest,
)
from src.errors import FormatError

logger = logging.getLogger(__name__)

MANIFEST_MAGIC = "DAPSET"
MANIFEST_VERSION = 1
SPLITS = ("train", "test")


@dataclass
class LabeledImageSet:
    """Standardized images [N x ch x h x w] with class labels."""

    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"
    mean: Optional[tuple[float, ...]] = None
    std: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise FormatError(f"images must be [N x ch x h x w], got {self.images.shape}")
        if self.images.shape[0] < 1:
            raise FormatError("dataset must contain at least one image")
        if self.labels.shape != (self.images.shape[0],):
            raise FormatError(
                f"{self.labels.shape[0]} labels for {self.images.shape[0]} images"
            )
        if self.split not in SPLITS:
            raise FormatError(f"split must be one of {SPLITS}, got {self.split!r}")
        bad = np.flatnonzero((self.labels < 0) | (self.labels >= self.num_classes))
        if bad.size:
            raise FormatError(
                f"label {self.labels[bad[0]]} at index {bad[0]} outside [0, {self.num_classes})"
            )

    def __len__(self) -> int:
        return self.images.shape[0]

    @property
    def channels(self) -> int:
        return self.images.shape[1]

    @property
    def resolution(self) -> int:
        return self.images.shape[2]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def raw_images(self) -> np.ndarray:
        return denormalize(self.images, self.mean, self.std)


def _channel_view(values: Optional[Sequence[float]], channels: int) -> np.ndarray:
    if values is None:
        return None
    array = np.asarray(values, dtype=np.float64)
    if array.size == 1:
        array = np.repeat(array, channels)
    if array.size != channels:
        raise FormatError(f"{array.size} channel statistics for {channels} channels")
    return array.reshape(1, channels, 1, 1)


def normalize(
    images: np.ndarray, mean: Optional[Sequence[float]], std: Optional[Sequence[float]]
) -> np.ndarray:
    channels = images.shape[1]
    mean_view = _channel_view(mean, channels)
    std_view = _channel_view(std, channels)
    out = images
    if mean_view is not None:
        out = out - mean_view.astype(images.dtype)
    if std_view is not None:
        if np.any(std_view <= 0):
            raise FormatError(f"std must be positive, got {list(std)}")
        out = out / std_view.astype(images.dtype)
    return out


def denormalize(
    images: np.ndarray, mean: Optional[Sequence[float]], std: Optional[Sequence[float]]
) -> np.ndarray:
    channels = images.shape[1]
    mean_view = _channel_view(mean, channels)
    std_view = _channel_view(std, channels)
    out = images
    if std_view is not None:
        out = out * std_view.astype(images.dtype)
    if mean_view is not None:
        out = out + mean_view.astype(images.dtype)
    return out


def compute_channel_stats(images: np.ndarray) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-channel mean and std of raw images (std floored at 1e-8)."""
    mean = images.mean(axis=(0, 2, 3))
    std = np.maximum(images.std(axis=(0, 2, 3)), 1e-8)
    return tuple(float(m) for m in mean), tuple(float(s) for s in std)


def with_stats(
    dataset: LabeledImageSet,
    mean: Optional[Sequence[float]],
    std: Optional[Sequence[float]],
) -> LabeledImageSet:
    """Re-standardize a dataset with new statistics."""
    raw = dataset.raw_images()
    return LabeledImageSet(
        images=normalize(raw, mean, std),
        labels=dataset.labels,
        num_classes=dataset.num_classes,
        split=dataset.split,
        mean=tuple(mean) if mean is not None else None,
        std=tuple(std) if std is not None else None,
    )


def save_dataset(
    dataset: LabeledImageSet,
    manifest_path: Union[str, Path],
    prefix: Optional[str] = None,
) -> Path:
    """Write ``<prefix>_images.bin``, ``<prefix>_labels.bin`` and the manifest."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    prefix = prefix or dataset.split
    images_name = f"{prefix}_images.bin"
    labels_name = f"{prefix}_labels.bin"
    raw = dataset.raw_images()
    save_tensor(manifest_path.parent / images_name, raw)
    save_tensor(manifest_path.parent / labels_name, dataset.labels)

    entries = {
        "magic": MANIFEST_MAGIC,
        "version": MANIFEST_VERSION,
        "split": dataset.split,
        "dtype": str(raw.dtype),
        "shape": raw.shape,
        "num_classes": dataset.num_classes,
    }
    if dataset.mean is not None:
        entries["mean"] = list(dataset.mean)
    if dataset.std is not None:
        entries["std"] = list(dataset.std)
    entries["images"] = images_name
    entries["labels"] = labels_name
    write_manifest(manifest_path, entries)
    logger.info(f"Saved {len(dataset)} {dataset.split} images to {manifest_path}")
    return manifest_path


def _require(manifest: dict[str, str], key: str, path: str) -> str:
    if key not in manifest:
        raise FormatError(f"manifest is missing key {key}", path=path)
    return manifest[key]


def load_dataset(manifest_path: Union[str, Path]) -> LabeledImageSet:
    """Load, validate and standardize a dataset described by a manifest."""
    manifest_path = Path(manifest_path)
    where = str(manifest_path)
    manifest = read_manifest(manifest_path)

    magic = _require(manifest, "magic", where)
    if magic != MANIFEST_MAGIC:
        raise FormatError(f"bad manifest magic {magic!r}", path=where)
    version = _require(manifest, "version", where)
    if version != str(MANIFEST_VERSION):
        raise FormatError(f"unsupported manifest version {version}", path=where)
    shape = parse_int_list(_require(manifest, "shape", where), "shape", where)
    try:
        num_classes = int(_require(manifest, "num_classes", where))
    except ValueError:
        raise FormatError("num_classes must be an integer", path=where) from None
    split = manifest.get("split", "train")
    dtype_name = _require(manifest, "dtype", where)
    try:
        dtype = np.dtype(dtype_name)
    except (TypeError, ValueError):
        raise FormatError(f"unknown manifest dtype {dtype_name!r}", path=where) from None
    mean = parse_float_list(manifest["mean"], "mean", where) if "mean" in manifest else None
    std = parse_float_list(manifest["std"], "std", where) if "std" in manifest else None

    images_path = manifest_path.parent / _require(manifest, "images", where)
    labels_path = manifest_path.parent / _require(manifest, "labels", where)
    images = load_tensor(images_path)
    labels = load_tensor(labels_path)

    if images.shape != shape:
        raise FormatError(
            f"image blob shape {images.shape} != manifest shape {shape}",
            path=str(images_path),
            offset=HEADER_SIZE,
        )
    if images.dtype != dtype:
        raise FormatError(
            f"image blob dtype {images.dtype} != manifest dtype {dtype}",
            path=str(images_path),
            offset=5,
        )
    if labels.shape != (shape[0],) or labels.dtype != np.int64:
        raise FormatError(
            f"label blob {labels.dtype}{labels.shape} does not match {shape[0]} images",
            path=str(labels_path),
            offset=HEADER_SIZE,
        )
    bad = np.flatnonzero((labels < 0) | (labels >= num_classes))
    if bad.size:
        offset = HEADER_SIZE + 8 * labels.ndim + 8 * int(bad[0])
        raise FormatError(
            f"label {labels[bad[0]]} at index {bad[0]} outside [0, {num_classes})",
            path=str(labels_path),
            offset=offset,
        )

    dataset = LabeledImageSet(
        images=normalize(images, mean, std),
        labels=labels,
        num_classes=num_classes,
        split=split,
        mean=mean,
        std=std,
    )
    logger.info(
        f"Loaded {split} set {where}: {shape[0]} images {shape[1:]} x {num_classes} classes"
    )
    return dataset
