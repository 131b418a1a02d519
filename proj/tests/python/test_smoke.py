import json

import numpy as np
import pytest

import uivnav

SMALL = {"camera": {"image_w": 64, "image_h": 64}}


@pytest.fixture(scope="module")
def grid():
    return uivnav.generate_world("gridworld", seed=1)


def test_world_shape_and_determinism(grid):
    assert grid.width_m >= 80
    assert grid.heights().shape == (grid.rows, grid.cols)
    assert grid.ooi().dtype == bool
    assert grid.ooi().any()
    assert uivnav.generate_world("gridworld", seed=1).digest == grid.digest
    assert uivnav.generate_world("gridworld", seed=2).digest != grid.digest
    back = uivnav.world_from_json(grid.to_json())
    assert back.digest == grid.digest


def test_unknown_scenario():
    with pytest.raises(ValueError):
        uivnav.generate_world("atlantis")


def test_render_and_segdepth_round_trip(grid):
    out = uivnav.render(grid, grid.spawn, json.dumps(SMALL))
    assert out["seg"].shape == (64, 64)
    assert out["segdepth"].shape == (64, 64, 3)
    seg, depth = uivnav.decompose_segdepth(out["segdepth"])
    np.testing.assert_array_equal(seg, out["seg"])
    np.testing.assert_array_equal(depth, out["depth"])
    np.testing.assert_array_equal(uivnav.compose_segdepth(seg, depth), out["segdepth"])
    assert uivnav.downsample(out["segdepth"], 32, 32).shape == (32, 32, 3)


def test_dimension_errors():
    with pytest.raises(ValueError):
        uivnav.compose_segdepth(np.zeros((4, 4), np.uint8), np.zeros((4, 4, 3), np.uint8))


def test_colormap_lut():
    lut = uivnav.colormap_lut()
    assert lut.shape == (256, 3)
    assert len({tuple(r) for r in lut}) == 256


def test_actions_and_loss():
    assert [uivnav.decode_action(c, 5.0) for c in range(7)] == [15, 10, 5, 0, -5, -10, -15]
    t = uivnav.smooth_label(3)
    assert sum(t) == pytest.approx(1.0)
    h = -sum(p * np.log(p) for p in t if p > 0)
    assert uivnav.loss(t, t, t, t, 0.3) == pytest.approx(0.3 * 2 * h)


def test_expert_on_empty_frame_holds():
    seg = np.zeros((64, 64), np.uint8)
    assert uivnav.expert_policy(seg, seg, json.dumps(SMALL)) == (3, 3)


def test_actuation():
    assert uivnav.velocity_to_pwm(0.0, "yaw") == 1500
    with pytest.raises(ValueError):
        uivnav.velocity_to_pwm(0.0, "roll")
    p = uivnav.classes_to_pwm(3, 3)
    assert p["surge"] > 1500 and p["heave"] == 1500 and p["yaw"] == 1500


def test_run_method_respects_budget(grid):
    metrics, log = uivnav.run_method(grid, "bcd", seed=0, budget=30.0, config=SMALL)
    assert 28.0 <= metrics["distance_m"] <= 30.0
    assert 0.0 <= metrics["pct_ooi_seen"] <= 1.0
    assert len(log) == metrics["steps"] + 2
    with pytest.raises(ValueError):
        uivnav.run_method(grid, "learned")


def test_compare_rows():
    cfg = dict(SMALL, eval={"parallel": 2})
    rows = uivnav.compare(["expert", "bb"], ["rock_reef"], seeds=2, budget=20.0, config=cfg)
    assert [(r["seed"], r["method"]) for r in rows] == [(0, "expert"), (0, "bb"), (1, "expert"), (1, "bb")]
    again = uivnav.compare(["expert", "bb"], ["rock_reef"], seeds=2, budget=20.0, config=SMALL)
    assert rows == again
