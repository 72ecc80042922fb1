# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
File handler that starts a new file per calendar day.
"""

import logging
from datetime import date, datetime
from pathlib import Path
from typing import Optional, Union


class DateRotatingFileHandler(logging.FileHandler):
    """Writes ``<stem>_<YYYY-MM-DD><suffix>`` and keeps the newest ``max_files``."""

    def __init__(self, filename: Union[str, Path], max_files: int = 30, encoding: str = "utf-8"):
        self.base_filename = Path(filename)
        self.max_files = max(1, max_files)
        self.current_date = datetime.now().date()
        path = self.dated_filename()
        path.parent.mkdir(parents=True, exist_ok=True)
        super().__init__(str(path), encoding=encoding, delay=True)
        self.prune()

    def dated_filename(self, day: Optional[date] = None) -> Path:
        day = day or self.current_date
        stem, suffix = self.base_filename.stem, self.base_filename.suffix
        return self.base_filename.parent / f"{stem}_{day:%Y-%m-%d}{suffix}"

    def emit(self, record: logging.LogRecord) -> None:
        today = datetime.now().date()
        if today != self.current_date:
            self.close()
            self.current_date = today
            self.baseFilename = str(self.dated_filename())
            self.stream = None
            self.prune()
        super().emit(record)

    def prune(self) -> list[Path]:
        """Delete the oldest dated files beyond ``max_files``; returns what was removed."""
        pattern = f"{self.base_filename.stem}_*{self.base_filename.suffix}"
        # ISO dates sort chronologically by name.
        files = sorted(self.base_filename.parent.glob(pattern))
        removed = []
        for path in files[: -self.max_files]:
            try:
                path.unlink()
                removed.append(path)
            except OSError:
                pass
        return removed
