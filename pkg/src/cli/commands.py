# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Command implementations. Each returns a process exit code; errors are raised
as ``DapPoolError`` subclasses and mapped to exit codes by ``main``.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Sequence

from src.config.configuration import RunConfig, load_run_config
from src.datasets.image_set import LabeledImageSet, load_dataset
from src.datasets.packing import load_pack_spec, pack_dataset
from src.errors import ConfigError, DimensionError, FormatError
from src.heads.types import HeadKind
from src.logging.run_logger import get_run_logger
from src.reports.comparison import ComparisonReport, ComparisonRow, percent
from src.training.checkpoint import load_checkpoint, read_checkpoint_info
from src.training.evaluation import evaluate
from src.training.trainer import TrainRun, build_model, train
from src.verify.suite import run_suite

logger = logging.getLogger(__name__)

EVALUATION_CSV = "evaluation.csv"
DEFAULT_HEADS = [kind.value for kind in HeadKind]


def _load_split(config: RunConfig, key: str, required: bool) -> Optional[LabeledImageSet]:
    section, name = key.split(".")
    value = getattr(getattr(config, section), name)
    if value is None:
        if required:
            raise config.config_error(key, "is required")
        return None
    if not Path(value).exists():
        raise config.config_error(key, f"file {value} does not exist")
    return load_dataset(value)


def _load_data(config: RunConfig) -> tuple[LabeledImageSet, Optional[LabeledImageSet]]:
    train_set = _load_split(config, "data.train_manifest", required=True)
    test_set = _load_split(config, "data.test_manifest", required=False)
    if test_set is not None and test_set.num_classes != train_set.num_classes:
        raise FormatError(
            f"test set has {test_set.num_classes} classes, train set {train_set.num_classes}",
            path=config.data.test_manifest,
        )
    return train_set, test_set


def _summary(run: TrainRun) -> str:
    last = run.history[-1]
    return (
        f"{run.head.kind.value}: {run.epochs_completed} epochs, "
        f"train acc {percent(last.train_acc)}%, test acc {percent(last.test_acc)}%"
    )


def cmd_train(config_path: str, overrides: Sequence[str] = ()) -> int:
    config = load_run_config(config_path, overrides)
    train_set, test_set = _load_data(config)
    output_dir = config.output_path()
    run_logger = get_run_logger()
    with run_logger.timing("cmd_train", config=str(config_path)):
        run = train(config, train_set, test_set, output_dir, run_logger=run_logger)
    print(_summary(run))
    print(f"artifacts: {output_dir}")
    return 0


def cmd_evaluate(
    checkpoint_dir: str,
    manifest: Optional[str] = None,
    output: Optional[str] = None,
    workers: int = 0,
) -> int:
    info, _ = read_checkpoint_info(checkpoint_dir)
    if not info.resolved_config.exists():
        raise FormatError("checkpoint has no resolved_config.txt", path=str(info.path))
    config = RunConfig.from_text(info.resolved_config.read_text(encoding="utf-8"))
    if config.config_hash() != info.config_hash:
        logger.warning(f"resolved config of {info.path} does not match its recorded hash")

    if manifest is not None:
        dataset = load_dataset(manifest)
    else:
        dataset = _load_split(config, "data.test_manifest", required=True)
    backbone, head = build_model(config, dataset.num_classes)
    try:
        load_checkpoint(info.path, backbone, head)
    except DimensionError as e:
        raise FormatError(f"checkpoint does not fit the model: {e}", path=str(info.path)) from e

    result = evaluate(backbone, head, dataset, config.train.batch_size, workers)
    target = Path(output) if output else info.path / EVALUATION_CSV
    result.write_csv(target)
    print(f"top-1 accuracy {percent(result.accuracy)}% on {result.num_samples} samples")
    for cls, accuracy in enumerate(result.per_class):
        print(f"  class {cls}: {percent(accuracy)}%")
    print(f"written: {target}")
    return 0


def _head_dir_name(kind: str) -> str:
    return kind.replace("+", "_")


def cmd_compare(
    config_path: str,
    heads: Iterable[str] = DEFAULT_HEADS,
    overrides: Sequence[str] = (),
    parallel: int = 0,
) -> int:
    heads = list(heads)
    for kind in heads:
        try:
            HeadKind(kind)
        except ValueError:
            raise ConfigError(
                f"unknown head kind {kind!r}; expected one of {DEFAULT_HEADS}", key="head.kind"
            ) from None
    base = load_run_config(config_path, overrides)
    train_set, test_set = _load_data(base)
    if test_set is None:
        raise base.config_error("data.test_manifest", "is required for compare")
    root = base.output_path()

    def run_head(kind: str) -> ComparisonRow:
        config = load_run_config(config_path, list(overrides) + [f"head.kind={kind}"])
        start = time.perf_counter()
        run = train(config, train_set, test_set, root / _head_dir_name(kind))
        runtime = time.perf_counter() - start
        return ComparisonRow(
            head=kind,
            final_test_acc=run.final_test_acc,
            best_test_acc=run.best_test_acc,
            seed=config.train.seed,
            config_hash=config.config_hash(),
            init_checksum=run.init_checksum,
            runtime_s=runtime,
        )

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel, thread_name_prefix="dap-compare") as pool:
            rows = list(pool.map(run_head, heads))
    else:
        rows = [run_head(kind) for kind in heads]

    report = ComparisonReport(rows=rows, dataset=Path(base.data.train_manifest).resolve().parent.name)
    if not report.shared_init:
        logger.error("backbone initialization differs between head runs")
    report.write(root)
    print(report.render_text(), end="")
    return 0


def cmd_verify(groups: Optional[Sequence[str]] = None, seed: int = 0) -> int:
    run_logger = get_run_logger()
    with run_logger.timing("cmd_verify"):
        report = run_suite(groups, seed=seed)
    print(report.describe())
    for failure in report.failures():
        logger.error(f"invariant violated: {failure.name}: {failure.detail}")
    return 0 if report.passed else 1


def cmd_dataset_pack(spec_path: str, output_dir: str) -> int:
    spec = load_pack_spec(spec_path)
    train_path, test_path = pack_dataset(spec, output_dir)
    print(f"train manifest: {train_path}")
    print(f"test manifest: {test_path}")
    return 0
