"""Behavior of the check harness itself (gating and sabotage detection)."""

import pytest

from activeflow.config import parse_config
from activeflow.verification import FAIL, SKIP, run_check


def make_config(**params_overrides):
    params = {"pe": 0.05, "de": 1.0, "dt": 0.01}
    params.update(params_overrides)
    return parse_config(
        {
            "grid": {"n_x": 16, "n_theta": 16},
            "params": params,
            "initial": {
                "kind": "single_mode",
                "m": 1.0,
                "epsilon": 0.5,
                "mode": [1, 0, 0],
            },
            "t_end": 1.0,
            "output_dir": "out",
        }
    )


def test_broken_time_step_fails_order_check():
    # 10x the advective CFL bound: the comparison run blows up or drifts far
    # from the oracle, and the equivalence check must say so.
    config = make_config(dt=4.0)
    with pytest.warns(RuntimeWarning):
        result = run_check(3, config)
    assert result.status == FAIL


def test_zero_peclet_skips_advection_checks():
    config = make_config(pe=0.0)
    assert run_check(3, config).status == SKIP
    assert run_check(9, config).status == SKIP


def test_unknown_criterion_rejected():
    with pytest.raises(ValueError):
        run_check(11, make_config())
