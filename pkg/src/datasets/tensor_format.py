# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
On-disk tensor blobs and key=value manifests.

Blob layout (all little-endian)::

    offset 0   4 bytes   magic b"DAPT"
    offset 4   uint8     format version (1)
    offset 5   uint8     dtype code (1=float64, 2=float32, 3=int64)
    offset 6   uint16    ndim
    offset 8   uint64[ndim] shape
    then       row-major element data
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from src.config.loader import parse_key_values
from src.errors import ConfigError, FormatError

logger = logging.getLogger(__name__)

BLOB_MAGIC = b"DAPT"
BLOB_VERSION = 1
_HEADER = struct.Struct("<4sBBH")
HEADER_SIZE = _HEADER.size

DTYPE_CODES = {
    np.dtype("<f8"): 1,
    np.dtype("<f4"): 2,
    np.dtype("<i8"): 3,
}
CODE_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}

PathLike = Union[str, Path]


def encode_tensor(array: np.ndarray) -> bytes:
    dtype = np.dtype(array.dtype).newbyteorder("<")
    if dtype not in DTYPE_CODES:
        raise FormatError(f"unsupported blob dtype {array.dtype}")
    header = _HEADER.pack(BLOB_MAGIC, BLOB_VERSION, DTYPE_CODES[dtype], array.ndim)
    dims = struct.pack(f"<{array.ndim}Q", *array.shape)
    return header + dims + np.ascontiguousarray(array, dtype=dtype).tobytes(order="C")


def decode_tensor(payload: bytes, path: str = "<bytes>") -> np.ndarray:
    if len(payload) < _HEADER.size:
        raise FormatError("truncated blob header", path=path, offset=len(payload))
    magic, version, code, ndim = _HEADER.unpack_from(payload, 0)
    if magic != BLOB_MAGIC:
        raise FormatError(f"bad magic {magic!r}", path=path, offset=0)
    if version != BLOB_VERSION:
        raise FormatError(f"unsupported blob version {version}", path=path, offset=4)
    if code not in CODE_DTYPES:
        raise FormatError(f"unknown dtype code {code}", path=path, offset=5)
    dims_end = _HEADER.size + 8 * ndim
    if len(payload) < dims_end:
        raise FormatError("truncated blob shape", path=path, offset=len(payload))
    shape = struct.unpack_from(f"<{ndim}Q", payload, _HEADER.size)
    if any(dim < 1 for dim in shape):
        raise FormatError(f"non-positive dimension in {shape}", path=path, offset=_HEADER.size)
    dtype = CODE_DTYPES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    actual = len(payload) - dims_end
    if actual != expected:
        raise FormatError(
            f"blob holds {actual} data bytes, shape {tuple(shape)} needs {expected}",
            path=path,
            offset=dims_end + min(actual, expected),
        )
    data = np.frombuffer(payload, dtype=dtype, offset=dims_end).reshape(shape)
    return data.astype(dtype.newbyteorder("="), copy=True)


def save_tensor(path: PathLike, array: np.ndarray) -> None:
    Path(path).write_bytes(encode_tensor(array))


def load_tensor(path: PathLike) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FormatError("blob file is missing", path=str(path))
    return decode_tensor(path.read_bytes(), path=str(path))


def format_manifest_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(format_manifest_value(v) for v in np.asarray(value).tolist())
    return str(value)


def write_manifest(path: PathLike, entries: dict) -> None:
    """Write an ordered key=value manifest."""
    lines = [f"{key}={format_manifest_value(value)}" for key, value in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: PathLike) -> dict[str, str]:
    """Read a manifest as raw strings; value decoding is up to the caller."""
    path = Path(path)
    if not path.exists():
        raise FormatError("manifest file is missing", path=str(path))
    try:
        entries = parse_key_values(path.read_text(encoding="utf-8"), source=str(path))
    except (ConfigError, UnicodeDecodeError) as e:
        raise FormatError(f"malformed manifest: {e}", path=str(path)) from e
    return {key: entry.raw for key, entry in entries.items()}


def parse_int_list(raw: str, key: str, path: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise FormatError(f"{key} must be a comma-separated int list, got {raw!r}", path=path)


def parse_float_list(raw: str, key: str, path: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise FormatError(
            f"{key} must be a comma-separated float list, got {raw!r}", path=path
        )
