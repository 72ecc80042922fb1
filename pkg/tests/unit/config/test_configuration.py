# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

from pathlib import Path

import pytest

from src.config.configuration import (
    RESOLVED_CONFIG_NAME,
    RunConfig,
    get_output_root,
    load_run_config,
)
from src.errors import ConfigError
from src.heads.types import HeadKind


def test_default_configuration():
    config = RunConfig()
    assert config.head.kind == HeadKind.DAP
    assert config.head.pw == 3
    assert config.head.stride == 2
    assert config.optim.base_lr == 0.1
    assert config.train.epochs == 30
    assert config.data.train_manifest is None


def test_from_text_nests_sections():
    config = RunConfig.from_text("head.kind=GMP\ntrain.epochs=3\nbackbone.widths=[4, 8]\n")
    assert config.head.kind == HeadKind.GMP
    assert config.train.epochs == 3
    assert config.backbone.widths == [4, 8]


def test_unknown_key_reports_its_line():
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_text("train.epochs=3\ntrain.epoch=4\n")
    assert exc.value.line == 2
    assert exc.value.key == "train.epoch"
    assert "unknown key train.epoch" in str(exc.value)


def test_invalid_value_reports_its_line():
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_text("optim.base_lr=0.1\noptim.momentum=1.5\n")
    assert exc.value.line == 2


def test_override_wins_and_is_marked():
    config = RunConfig.from_text("train.epochs=3\n", ["train.epochs=5"])
    assert config.train.epochs == 5
    with pytest.raises(ConfigError, match="from --set"):
        RunConfig.from_text("train.epochs=3\n", ["train.epochs=0"])


def test_env_substitution(monkeypatch):
    monkeypatch.setenv("DAP_TEST_TRAIN", "data/train.manifest")
    config = RunConfig.from_text("data.train_manifest=$DAP_TEST_TRAIN\n")
    assert config.data.train_manifest == "data/train.manifest"


def test_config_error_uses_entry_line():
    config = RunConfig.from_text("train.epochs=3\ndata.test_manifest=x\n")
    error = config.config_error("data.test_manifest", "file x does not exist")
    assert error.line == 2
    assert config.config_error("data.train_manifest", "is required").line is None


def test_resolved_text_round_trips():
    config = RunConfig.from_text("head.kind=GAP+GMP\ntrain.seed=4\n")
    again = RunConfig.from_text(config.resolved_text())
    assert again.model_dump() == config.model_dump()
    assert again.config_hash() == config.config_hash()
    assert 'head.kind="GAP+GMP"' in config.resolved_text()


def test_hash_ignores_layout_and_comments():
    a = RunConfig.from_text("train.seed=1\nhead.kind=GAP\n")
    b = RunConfig.from_text("# comment\nhead.kind = GAP\n\ntrain.seed = 1\n")
    c = RunConfig.from_text("train.seed=2\nhead.kind=GAP\n")
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()


def test_output_root(monkeypatch, tmp_path):
    monkeypatch.delenv("DAP_OUTPUT_ROOT", raising=False)
    assert get_output_root() == Path("runs")
    monkeypatch.setenv("DAP_OUTPUT_ROOT", str(tmp_path))
    config = RunConfig.from_text("output_dir=desk\n")
    assert config.output_path() == tmp_path / "desk"
    absolute = RunConfig.from_text(f"output_dir={tmp_path / 'abs'}\n")
    assert absolute.output_path() == tmp_path / "abs"


def test_write_resolved(tmp_path):
    config = RunConfig.from_text("train.epochs=2\n")
    target = config.write_resolved(tmp_path / "run")
    assert target.name == RESOLVED_CONFIG_NAME
    assert target.read_text() == config.resolved_text()


def test_load_run_config(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text("train.epochs=7\nhead.kind=GAP\n")
    config = load_run_config(path, ["train.batch_size=16"])
    assert config.train.epochs == 7
    assert config.train.batch_size == 16
    assert config.entry("train.epochs").location() == f"{path}:1"


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.txt")
