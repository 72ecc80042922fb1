# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import logging

import pytest

from main import main
from src.autodiff.tensor import debug_enabled
from src.cli.parser import build_parser


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch, tmp_path):
    monkeypatch.setenv("DAP_LOG_TO_FILES", "false")
    monkeypatch.setenv("DAP_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("DAP_OUTPUT_ROOT", str(tmp_path / "runs"))
    yield
    root = logging.getLogger()
    for handler in root.handlers[:]:
        root.removeHandler(handler)


class TestParser:
    def test_train_overrides_accumulate(self):
        args = build_parser().parse_args(
            ["train", "run.txt", "--set", "train.epochs=2", "--set", "head.kind=GAP"]
        )
        assert args.command == "train"
        assert args.overrides == ["train.epochs=2", "head.kind=GAP"]

    def test_compare_defaults_to_all_heads(self):
        args = build_parser().parse_args(["compare", "run.txt"])
        assert args.heads == "GAP,GMP,GAP+GMP,DAP"
        assert args.parallel == 0

    def test_global_flags(self):
        args = build_parser().parse_args(["--verbose", "verify", "--only", "schedule"])
        assert args.verbose
        assert args.only == ["schedule"]

    def test_dataset_pack_needs_output(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["dataset", "pack", "spec.txt"])


class TestExitCodes:
    def test_no_command_is_usage_error(self):
        assert main([]) == 2

    def test_unknown_check_group_is_usage_error(self):
        assert main(["verify", "--only", "nope"]) == 2

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "dap-pool" in capsys.readouterr().out

    def test_verify_group_passes(self, capsys):
        assert main(["verify", "--only", "schedule"]) == 0
        assert "1/1 checks passed" in capsys.readouterr().out

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["train", str(tmp_path / "missing.txt")]) == 2
        assert capsys.readouterr().err.startswith("error: ")

    def test_missing_train_manifest_names_the_key(self, tmp_path, capsys):
        config = tmp_path / "run.txt"
        config.write_text("train.epochs=1\n")
        assert main(["train", str(config)]) == 2
        assert "data.train_manifest" in capsys.readouterr().err

    def test_missing_dataset_file_names_the_line(self, tmp_path, capsys):
        config = tmp_path / "run.txt"
        config.write_text("train.epochs=1\ndata.train_manifest=nowhere/train.manifest\n")
        assert main(["train", str(config)]) == 2
        err = capsys.readouterr().err
        assert "line 2" in err
        assert "does not exist" in err

    def test_unknown_head_in_compare(self, tmp_path, capsys):
        config = tmp_path / "run.txt"
        config.write_text("train.epochs=1\n")
        assert main(["compare", str(config), "--heads", "GAP,SPP"]) == 2
        assert "SPP" in capsys.readouterr().err

    def test_bad_override(self, tmp_path):
        config = tmp_path / "run.txt"
        config.write_text("train.epochs=1\n")
        assert main(["train", str(config), "--set", "train.epochs=zero"]) == 2

    def test_debug_flag_is_restored(self):
        before = debug_enabled()
        main(["--debug", "verify", "--only", "schedule"])
        assert debug_enabled() == before
