# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import pandas as pd
import pytest

from src.reports.comparison import (
    REPORT_CSV,
    REPORT_TXT,
    RUNTIMES_CSV,
    ComparisonReport,
    ComparisonRow,
    percent,
)


def row(head, final, best, checksum="abc123def456789", runtime=1.5):
    return ComparisonRow(
        head=head,
        final_test_acc=final,
        best_test_acc=best,
        seed=0,
        config_hash=f"hash-{head}",
        init_checksum=checksum,
        runtime_s=runtime,
    )


@pytest.fixture
def report():
    return ComparisonReport(
        rows=[row("GAP", 0.9, 0.91), row("DAP", 0.9553, 0.96, runtime=12.25)],
        dataset="synthetic",
    )


@pytest.mark.parametrize(
    "value, expected", [(0.9553, "95.53"), (1.0, "100.00"), (0.0, "0.00"), (None, "n/a")]
)
def test_percent(value, expected):
    assert percent(value) == expected


def test_frame_has_no_runtime(report):
    frame = report.to_frame()
    assert list(frame.columns) == [
        "head", "final_test_acc", "best_test_acc", "seed", "config_hash", "init_checksum",
    ]
    assert frame["head"].tolist() == ["GAP", "DAP"]


def test_render_text(report):
    text = report.render_text()
    lines = text.splitlines()
    assert lines[0] == "Test accuracies by pooling head (synthetic, seed 0)"
    assert "backbone + DAP" in text
    assert "95.53" in text
    assert "12.2" in text
    assert "backbone init abc123def456" in text
    assert "WARNING" not in text


def test_differing_init_is_flagged(report):
    report.add(row("GMP", 0.5, 0.5, checksum="other"))
    assert not report.shared_init
    assert "WARNING: backbone init differs" in report.render_text()


def test_write(report, tmp_path):
    paths = report.write(tmp_path / "compare")
    assert paths["csv"].name == REPORT_CSV
    assert paths["runtimes"].name == RUNTIMES_CSV
    assert paths["text"].name == REPORT_TXT
    frame = pd.read_csv(paths["csv"])
    assert frame["final_test_acc"].tolist() == [0.9, 0.9553]
    assert pd.read_csv(paths["runtimes"])["runtime_s"].tolist() == [1.5, 12.25]


def test_csv_is_stable_across_runtimes(report, tmp_path):
    report.write(tmp_path / "a")
    for r in report.rows:
        r.runtime_s += 3.0
    report.write(tmp_path / "b")
    assert (tmp_path / "a" / REPORT_CSV).read_bytes() == (tmp_path / "b" / REPORT_CSV).read_bytes()
