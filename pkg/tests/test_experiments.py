import json

import numpy as np
import pytest

from cnt.config import parse_config
from cnt.experiments import (METHODS, _clean, _speed_trajectory, condition_seed, error_grid,
                             joint_landscape, run_experiment, run_methods, simulate, to_json)
from cnt.objective import SearchDomain
from cnt.plotting import emit_plots
from cnt.scene import TrajectorySpec

SMALL = """
[experiment]
kind = {kind}
seed = 5
speeds = 1, 4
illuminations = 1, 0.25
n_values = 1-3
travel_budget = 0.8
min_duration = 0.2
[scene]
grid_width = 64
grid_height = 48
speckle_grain = 4
[trajectory]
kind = constant-velocity
velocity = 2, 0
duration = 0.4
[tracking]
n = {n}
omega = 15
[search]
n_set = 1-3
omega_set = 10, 15
"""


def small(kind="validate", n="2", **kw):
    return parse_config(SMALL.format(kind=kind, n=n)).replace(**kw)


def test_condition_seeds_are_stable_and_distinct():
    assert condition_seed(5, 0) == condition_seed(5, 0)
    seeds = {condition_seed(5, i) for i in range(50)}
    assert len(seeds) == 50
    assert condition_seed(5, 1) != condition_seed(6, 1)


def test_validate_run_is_bit_identical(tmp_path):
    a = run_experiment(small())
    b = run_experiment(small())
    assert to_json(a.document) == to_json(b.document)
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    assert (tmp_path / "a" / "results.json").read_bytes() == (tmp_path / "b" / "results.json").read_bytes()
    for p in (tmp_path / "a" / "trajectories").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / "trajectories" / p.name).read_bytes()
    c = run_experiment(small(seed=6))
    assert to_json(c.document) != to_json(a.document)


def test_results_document_shape():
    doc = json.loads(to_json(run_experiment(small()).document))
    assert doc["schema"] == "cnt-results/1"
    assert doc["config"]["seed"] == 5 and "out_dir" not in doc["config"]
    (cond,) = doc["conditions"]
    assert set(cond["errors"]) == set(METHODS)
    assert cond["cnt_params"] == {"n": 2, "omega": 15}
    assert cond["n_events"] > 0 and cond["n_frames"] == 10
    assert cond["trajectories"]["cnt"]["csv"] == "trajectories/validate_cnt.csv"


def test_free_parameters_are_optimised():
    doc = run_experiment(small(n="auto")).document
    cond = doc["conditions"][0]
    assert cond["cnt_params"]["n"] in (1, 2, 3)
    assert cond["objective"]["n_star"] == cond["cnt_params"]["n"]


def test_failures_are_recorded_as_full_error():
    cfg = small()
    data = simulate(cfg, cfg.trajectory, 1)
    data.events = data.events.slice_time(0, 100_000)
    res = run_methods(cfg, data, 1, 15)
    assert res["cnt"]["error"] == 1.0
    assert "degenerate" in res["cnt"]["failure"]
    assert res["frame"]["failure"] is None


def test_speed_sweep_durations_follow_travel_budget():
    cfg = small("sweep-speed")
    assert _speed_trajectory(cfg, 1.0).duration == pytest.approx(0.4)
    assert _speed_trajectory(cfg, 4.0).duration == pytest.approx(0.2)
    assert _speed_trajectory(cfg, 4.0).velocity == (4.0, 0.0)


@pytest.mark.parametrize("kind", ["sweep-speed", "sweep-illumination", "sweep-n", "trajectory"])
def test_each_kind_runs_and_plots(kind, tmp_path):
    bundle = run_experiment(small(kind))
    doc = json.loads(to_json(bundle.document))
    assert doc["kind"] == kind and doc["conditions"]
    if kind == "sweep-n":
        assert len(doc["conditions"][0]["cnt_error_by_n"]) == 3
        assert doc["summary"]["best_n"][0] in (1, 2, 3)
    if kind == "sweep-illumination":
        assert [c["illumination"] for c in doc["conditions"]] == [1.0, 0.25]
    if kind == "trajectory":
        assert doc["summary"]["path_over_d_ome"] == pytest.approx(0.4)
    assert emit_plots(doc, tmp_path)


def test_joint_landscape_tables():
    cfg = small("optimize-joint", n="auto")
    data = simulate(cfg, cfg.trajectory, 2)
    land = joint_landscape(cfg, data)
    J = np.array(land["J"], dtype=float)
    assert J.shape == (3, 2)
    i, j = np.unravel_index(np.nanargmax(J), J.shape)
    assert tuple(land["j_argmax"]) == (land["n_set"][i], land["omega_set"][j])
    err = np.array(land["error"], dtype=float)
    assert land["error_min"] == pytest.approx(np.nanmin(err))


def test_error_grid_matches_tracker():
    cfg = small()
    data = simulate(cfg, cfg.trajectory, 3)
    res = run_methods(cfg, data, 2, 15)
    grid = error_grid(data.events, data.trajectory, SearchDomain((2,), (15,)), data.scene)
    assert grid[0, 0] == pytest.approx(res["cnt"]["error"], rel=1e-6)


def test_waypoint_errors_use_path_length():
    cfg = small("trajectory")
    traj = TrajectorySpec.from_waypoints([(0, 0, 0), (0.2, 0.3, 0), (0.4, 0.3, 0.3)])
    data = simulate(cfg, traj, 4)
    res = run_methods(cfg, data, 2, 15)
    rep = res["cnt"]["report"]
    assert res["cnt"]["error"] == pytest.approx(rep.path_error())


def test_clean_makes_json_safe():
    out = _clean({"a": np.float32(1.5), "b": [np.nan, np.inf], 3: np.arange(2), "c": (np.int64(2),)})
    assert out == {"a": 1.5, "b": [None, None], "3": [0, 1], "c": [2]}
    json.loads(to_json({"x": np.nan}))
