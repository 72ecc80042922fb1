# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Entry point script for dap-pool.

Exit codes: 0 success, 1 invariant or numeric failure, 2 config/format/usage error.
"""

import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from src.autodiff.tensor import debug_enabled, set_debug
from src.cli.commands import (
    cmd_compare,
    cmd_dataset_pack,
    cmd_evaluate,
    cmd_train,
    cmd_verify,
)
from src.cli.parser import build_parser
from src.errors import ConfigError, DapPoolError, FormatError
from src.logging import LoggingConfig, setup_logging

logger = logging.getLogger(__name__)


def _dispatch(args) -> int:
    if args.command == "train":
        return cmd_train(args.config, args.overrides)
    if args.command == "evaluate":
        return cmd_evaluate(args.checkpoint, args.manifest, args.output, args.workers)
    if args.command == "compare":
        heads = [h.strip() for h in args.heads.split(",") if h.strip()]
        return cmd_compare(args.config, heads, args.overrides, args.parallel)
    if args.command == "verify":
        return cmd_verify(args.only, args.seed)
    if args.command == "dataset" and args.dataset_command == "pack":
        return cmd_dataset_pack(args.spec, args.output)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return int(e.code or 0)

    console_level = "DEBUG" if args.debug else "INFO" if args.verbose else "WARNING"
    setup_logging(replace(LoggingConfig.from_env(), console_level=console_level))
    previous_debug = debug_enabled()
    set_debug(args.debug or previous_debug)

    try:
        return _dispatch(args)
    except (ConfigError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DapPoolError as e:
        logger.debug("run failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    finally:
        set_debug(previous_debug)


if __name__ == "__main__":
    sys.exit(main())
