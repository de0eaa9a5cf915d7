# Copyright 2026 The Cotune Authors
# SPDX-License-Identifier: Apache-2.0
import math
import os
from pathlib import Path

import numpy as np
import pytest

import cotune

SOURCE = Path(os.environ.get("COTUNE_SOURCE_DIR",
                             Path(__file__).resolve().parents[2]))

TINY = """
experiment: tiny
system: {kind: msd, factors: {mass: 1.5}}
model: {tunable: [mass]}
task: {x0: [1, 0], horizon: 60}
tuning: {outer_iterations: 2, inner_epochs: 6}
run: {strategies: [split_alternate, difftune_model], seeds: [0, 1]}
"""


def test_scalar_riccati():
    one = np.eye(1)
    k = cotune.lqr(one, one, one, one)
    assert abs(k[0, 0] - (math.sqrt(5) - 1) / 2) < 1e-9


def test_cartpole_lqr_stabilizes():
    a, b = cotune.linearize("cartpole")
    k = cotune.lqr(a, b, np.eye(4), np.eye(1))
    assert cotune.spectral_radius(a - b @ k) < 1
    j = cotune.j_task("cartpole", list(k.ravel()), [0, 0.2, 0, 0])
    assert j == pytest.approx(0.267600020844363, rel=1e-6)


def test_rollout_shapes():
    states, controls = cotune.rollout("msd", [1.0, 0.5], [1, 0], horizon=10)
    assert len(states) == 11 and len(controls) == 10
    assert controls[0] == [-1.0]


def test_terminate_and_param_count():
    assert cotune.terminate(1.0, 1.0005) == "converged"
    assert cotune.terminate(1.1, 1.0) == "diverged"
    assert cotune.terminate(1.0, 1.1) == "continue"
    assert cotune.param_count([4, 32, 32, 1]) == 1249


def test_config_errors():
    with pytest.raises(cotune.ConfigError, match="unknown key 'foo'"):
        cotune.Config.parse("experiment: x\nfoo: 1\n")
    with pytest.raises(ValueError):
        cotune.Config.load(str(SOURCE / "missing.yaml"))


def test_config_round_trip():
    cfg = cotune.Config.load(str(SOURCE / "configs" / "fig5b.yaml"))
    assert cfg.strategies[0] == "split_alternate"
    assert cotune.Config.parse(cfg.to_yaml()) == cfg


def test_run_and_compare(tmp_path):
    cfg = cotune.Config.parse(TINY)
    rows = cotune.run_experiment(cfg, str(tmp_path))
    assert len(rows) == 2 * 2 * 3
    text = (tmp_path / "results.csv").read_text()
    assert text.splitlines()[0] == cotune.CSV_HEADER
    assert cotune.read_results(str(tmp_path / "results.csv")) == rows
    summary, table = cotune.compare(str(tmp_path))
    assert set(summary) == {"split_alternate", "difftune_model"}
    for s in summary.values():
        assert s["median_best"] <= s["median_nominal"]
    assert "split_alternate" in table


def test_rerun_is_identical(tmp_path):
    cfg = cotune.Config.parse(TINY)
    cfg.seeds = [3]
    cotune.run_experiment(cfg, str(tmp_path / "a"))
    cotune.run_experiment(cfg, str(tmp_path / "b"))
    assert ((tmp_path / "a" / "results.csv").read_bytes() ==
            (tmp_path / "b" / "results.csv").read_bytes())


def test_gradcheck_small():
    report = cotune.gradcheck(seeds=2, horizon=20, include_mlp=False)
    assert report["ok"] and report["cases"] == 4
