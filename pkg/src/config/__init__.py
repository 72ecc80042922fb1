# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

from dotenv import load_dotenv

from .configuration import (
    RESOLVED_CONFIG_NAME,
    DataConfig,
    OptimConfig,
    RunConfig,
    TrainConfig,
    get_output_root,
    load_run_config,
)
from .loader import (
    ConfigEntry,
    load_key_value_file,
    parse_key_values,
    parse_overrides,
    parse_value,
    process_dict,
    replace_env_vars,
)

# Load environment variables
load_dotenv()

__all__ = [
    "RESOLVED_CONFIG_NAME",
    "DataConfig",
    "OptimConfig",
    "RunConfig",
    "TrainConfig",
    "get_output_root",
    "load_run_config",
    "ConfigEntry",
    "load_key_value_file",
    "parse_key_values",
    "parse_overrides",
    "parse_value",
    "process_dict",
    "replace_env_vars",
]
