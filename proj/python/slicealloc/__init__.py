"""Python bindings for the sliced OFDMA power allocator."""

import json as _json
import os as _os

from ._core import (
    InfeasibleError,
    ParseError,
    brute_force_power,
    delay_outage_probability,
    path_loss_inf_dl,
    path_loss_nlos,
    solve,
    ts_target_rate,
    urllc_target_rate,
    water_fill,
)

__all__ = [
    "InfeasibleError",
    "ParseError",
    "brute_force_power",
    "delay_outage_probability",
    "path_loss_inf_dl",
    "path_loss_nlos",
    "run_scenario",
    "solve",
    "ts_target_rate",
    "urllc_target_rate",
    "water_fill",
]


def run_scenario(path, seed=None, no_admission=False):
    """Run a scenario file and return {"config": ..., "slots": [...]} as plain dicts."""
    from ._core import _run_scenario_json

    return _json.loads(_run_scenario_json(_os.fspath(path), seed, no_admission))
