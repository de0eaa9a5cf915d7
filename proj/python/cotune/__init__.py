# Copyright 2026 The Cotune Authors
# SPDX-License-Identifier: Apache-2.0
"""Co-tuning of simulator and controller parameters."""

from ._cotune import (
    CSV_HEADER,
    Config,
    ConfigError,
    Error,
    compare,
    gradcheck,
    j_task,
    linearize,
    lqr,
    param_count,
    read_results,
    rollout,
    run_experiment,
    spectral_radius,
    terminate,
)

__all__ = [
    "CSV_HEADER",
    "Config",
    "ConfigError",
    "Error",
    "compare",
    "gradcheck",
    "j_task",
    "linearize",
    "lqr",
    "param_count",
    "read_results",
    "rollout",
    "run_experiment",
    "spectral_radius",
    "terminate",
]
