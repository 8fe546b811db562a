import math
import pathlib

import numpy as np
import pytest

import slicealloc

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_urllc_target_rate():
    assert slicealloc.urllc_target_rate(2e6, 0.999, 0.010, 0.001) == pytest.approx(2.001e6, rel=1e-9)


def test_ts_target_rate():
    assert slicealloc.ts_target_rate(16400, 0.010) == pytest.approx(1.64e6)


def test_path_loss():
    assert slicealloc.path_loss_inf_dl(100.0, 3.7) == pytest.approx(101.36, abs=0.01)
    assert slicealloc.path_loss_nlos(50.0, 3.7) >= slicealloc.path_loss_inf_dl(50.0, 3.7)


def test_water_fill_meets_target():
    bw = 180e3
    inv = [1.0, 2.0, 40.0]
    lam, power = slicealloc.water_fill(3 * bw, inv, bw)
    bits = sum(math.log2(1 + p / c) for p, c in zip(power, inv))
    assert bits * bw == pytest.approx(3 * bw)
    assert lam > 0


def test_solve_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(10):
        gains = rng.exponential(1.0, size=(2, 4)) * 1e-9
        targets = list(rng.uniform(1e5, 6e5, size=2))
        res = slicealloc.solve(gains, 1e-13, 180e3, targets)
        feasible, ref = slicealloc.brute_force_power(gains, 1e-13, 180e3, targets)
        assert res["feasible"] == feasible
        assert res["total_power_w"] <= ref * 1.02
        assert (res["assignment"].sum(axis=0) <= 1).all()
        assert np.all(res["rates"] >= np.array(targets) * (1 - 1e-6))


def test_run_scenario():
    run = slicealloc.run_scenario(ROOT / "tests" / "data" / "mini.json")
    assert len(run["slots"]) == run["config"]["num_slots"] == 12
    assert run["config"]["name"] == "mini"


def test_parse_error_is_value_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ValueError):
        slicealloc.run_scenario(bad)
