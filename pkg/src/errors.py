# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Exception hierarchy shared by every dap-pool subpackage.
"""

from typing import Optional


class DapPoolError(Exception):
    """Base class for all errors raised by dap-pool."""


class DimensionError(DapPoolError):
    """Operand shapes are incompatible with an operation."""


class DomainError(DapPoolError):
    """A value lies outside the domain of a function (e.g. log of zero)."""


class ContractError(DapPoolError):
    """An API was used in a way its contract forbids."""


class NumericError(DapPoolError):
    """A NaN or Inf appeared in a loss or gradient."""

    def __init__(self, message: str, parameter: Optional[str] = None):
        super().__init__(message)
        self.parameter = parameter


class ConfigError(DapPoolError):
    """Invalid run, backbone or head configuration."""

    def __init__(
        self, message: str, key: Optional[str] = None, line: Optional[int] = None
    ):
        self.key = key
        self.line = line
        location = ""
        if line is not None:
            location = f"line {line}: "
        elif key is not None and key not in message:
            location = f"{key}: "
        super().__init__(f"{location}{message}")


class FormatError(DapPoolError):
    """On-disk data does not follow the manifest/blob format."""

    def __init__(
        self, message: str, path: Optional[str] = None, offset: Optional[int] = None
    ):
        self.path = path
        self.offset = offset
        parts = [message]
        if path is not None:
            parts.append(f"file={path}")
        if offset is not None:
            parts.append(f"offset={offset}")
        super().__init__(" ".join(parts))


class TargetIndexError(DapPoolError, IndexError):
    """A target class index is outside [0, num_classes)."""
