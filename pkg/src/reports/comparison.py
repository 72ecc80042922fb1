# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Head-comparison report: one row per head kind trained from the same seed.

``report.csv`` holds only deterministic columns so reruns are byte-identical;
wall-clock runtimes go to ``runtimes.csv`` and the text table.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import pandas as pd
from jinja2 import Environment, FileSystemLoader, select_autoescape

logger = logging.getLogger(__name__)

REPORT_CSV = "report.csv"
RUNTIMES_CSV = "runtimes.csv"
REPORT_TXT = "report.txt"

env = Environment(
    loader=FileSystemLoader(os.path.join(os.path.dirname(__file__), "templates")),
    autoescape=select_autoescape(),
    trim_blocks=True,
    lstrip_blocks=True,
)


@dataclass
class ComparisonRow:
    head: str
    final_test_acc: float
    best_test_acc: float
    seed: int
    config_hash: str
    init_checksum: str
    runtime_s: float = 0.0


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow] = field(default_factory=list)
    dataset: str = ""

    def add(self, row: ComparisonRow) -> None:
        self.rows.append(row)

    @property
    def shared_init(self) -> bool:
        return len({row.init_checksum for row in self.rows}) <= 1

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "head": r.head,
                    "final_test_acc": r.final_test_acc,
                    "best_test_acc": r.best_test_acc,
                    "seed": r.seed,
                    "config_hash": r.config_hash,
                    "init_checksum": r.init_checksum,
                }
                for r in self.rows
            ]
        )

    def runtime_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{"head": r.head, "runtime_s": r.runtime_s} for r in self.rows])

    def render_text(self) -> str:
        rows = [
            {
                "method": f"backbone + {r.head}",
                "final": percent(r.final_test_acc),
                "best": percent(r.best_test_acc),
                "runtime": f"{r.runtime_s:.1f}",
            }
            for r in self.rows
        ]
        widths = {
            "method": max([len("Method")] + [len(r["method"]) for r in rows]),
            "acc": max([len("Final (%)")] + [len(r["final"]) for r in rows]),
            "runtime": max([len("Runtime (s)")] + [len(r["runtime"]) for r in rows]),
        }
        template = env.get_template("comparison.txt")
        return template.render(
            rows=rows,
            widths=widths,
            dataset=self.dataset or "dataset",
            seed=self.rows[0].seed if self.rows else "-",
            init_checksum=self.rows[0].init_checksum if self.rows else "",
            shared_init=self.shared_init,
        )

    def write(self, directory: Union[str, Path]) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {
            "csv": directory / REPORT_CSV,
            "runtimes": directory / RUNTIMES_CSV,
            "text": directory / REPORT_TXT,
        }
        self.to_frame().to_csv(paths["csv"], index=False, float_format="%.10g")
        self.runtime_frame().to_csv(paths["runtimes"], index=False, float_format="%.3f")
        paths["text"].write_text(self.render_text(), encoding="utf-8")
        logger.info(f"Comparison report with {len(self.rows)} rows written to {directory}")
        return paths


def percent(value: Optional[float]) -> str:
    """Fixed two-decimal percentage, e.g. 0.9553 -> '95.53'."""
    if value is None or pd.isna(value):
        return "n/a"
    return f"{100.0 * value:.2f}"
