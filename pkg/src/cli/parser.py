# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import argparse

from src.verify.suite import CHECKS

from .commands import DEFAULT_HEADS


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config key (repeatable), e.g. --set head.kind=GAP",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dap-pool",
        description="Train and compare pooling heads (GAP, GMP, GAP+GMP, DAP) on a small CNN",
    )
    parser.add_argument("--verbose", action="store_true", help="Log progress to the console")
    parser.add_argument(
        "--debug",
        action="store_true",
        help="Debug logging and finiteness checks on every op",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="Train one model from a config file")
    train.add_argument("config", help="key=value run config")
    _add_overrides(train)

    evaluate = commands.add_parser("evaluate", help="Evaluate a saved checkpoint")
    evaluate.add_argument("checkpoint", help="Checkpoint directory")
    evaluate.add_argument(
        "--manifest", default=None, help="Dataset manifest (default: the run's test set)"
    )
    evaluate.add_argument(
        "--output", default=None, help="CSV path (default: <checkpoint>/evaluation.csv)"
    )
    evaluate.add_argument("--workers", type=int, default=0, help="Evaluation threads")

    compare = commands.add_parser("compare", help="Train every head kind from the same seed")
    compare.add_argument("config", help="key=value run config")
    compare.add_argument(
        "--heads",
        default=",".join(DEFAULT_HEADS),
        help=f"Comma-separated head kinds (default: {','.join(DEFAULT_HEADS)})",
    )
    compare.add_argument(
        "--parallel", type=int, default=0, help="Train this many head kinds concurrently"
    )
    _add_overrides(compare)

    verify = commands.add_parser("verify", help="Run the property suite")
    verify.add_argument(
        "--only",
        action="append",
        choices=sorted(CHECKS),
        default=None,
        help="Run only this check group (repeatable)",
    )
    verify.add_argument("--seed", type=int, default=0)

    dataset = commands.add_parser("dataset", help="Dataset utilities")
    dataset_commands = dataset.add_subparsers(dest="dataset_command", required=True)
    pack = dataset_commands.add_parser("pack", help="Write manifests + blobs from a pack spec")
    pack.add_argument("spec", help="key=value pack spec")
    pack.add_argument("--output", required=True, help="Output directory")

    return parser
