# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT
