import dataclasses
import json

import numpy as np
import pytest

from surfscan.cli import main
from surfscan.scenario import DEMO_NAMES, build_scene, demo_scenario, load_scenario

GOOD_YAML = """
version: 1
name: test-wall
mode: adaptive
seed: 3
voxel_size: 0.1
inflation: 0.5
dt: 0.1
max_sim_time: 60
gamma_t: 0.5
horizon: 4
pos_tol: 0.3
yaw_tol: 0.2
z_band: [0.6, 0.6]
robot:
  start: [4.0, -5.0, 0.6, 0.0]
  v_max: 0.8
  w_max: 1.0
view: {d_view: 2.0, gamma_h: 0.6, gamma_v: 0.6, alpha_deg: 69.5, beta_deg: 45.0}
camera: {alpha_deg: 69.5, beta_deg: 45.0, width: 64, height: 48, max_range: 5.0}
sensing: {range: 12.0, rays: 1024}
maps:
  bounds: {lo: [-1, -8, 0], hi: [12, 7, 2.4]}
  historical:
    boxes:
      - {lo: [6.0, -3.0, 0.0], hi: [6.4, 3.0, 2.4]}
  delta:
    removals: []
    additions:
      - {lo: [1.5, -4.6, 0.0], hi: [3.5, -4.2, 1.4]}
tasks:
  - id: wall
    vertices: [[6, -3, 0], [6, 3, 0], [6, 3, 2], [6, -3, 2]]
"""


def test_load_scenario_roundtrip(tmp_path):
    f = tmp_path / "scn.yaml"
    f.write_text(GOOD_YAML)
    cfg = load_scenario(f)
    assert cfg.name == "test-wall"
    assert cfg.seed == 3
    assert cfg.horizon == 4
    assert cfg.camera.width == 64
    assert cfg.sense_rays == 1024
    assert len(cfg.tasks) == 1
    scene = build_scene(cfg)
    assert scene.historical.occupied_count > 0
    assert scene.current.occupied_count > scene.historical.occupied_count  # addition applied


def test_load_scenario_map_file(tmp_path):
    f = tmp_path / "map.xyz"
    f.write_text("6.05 0.05 0.55\n")
    scn = tmp_path / "scn.yaml"
    scn.write_text(
        "version: 1\nmaps:\n  historical: {file: map.xyz}\n"
        "tasks:\n  - id: t\n    vertices: [[6,-1,0],[6,1,0],[6,1,1],[6,-1,1]]\n"
    )
    cfg = load_scenario(scn)
    scene = build_scene(cfg, base_dir=tmp_path)
    assert scene.historical.occupied_count == 1


def test_load_scenario_rejects_bad_version(tmp_path):
    f = tmp_path / "scn.yaml"
    f.write_text("version: 99\ntasks: []\n")
    with pytest.raises(ValueError, match="version"):
        load_scenario(f)


def test_scenario_requires_tasks():
    with pytest.raises(ValueError, match="no tasks"):
        demo = demo_scenario("nominal")
        dataclasses.replace(demo, tasks=())


def test_scenario_validates_ranges():
    demo = demo_scenario("nominal")
    with pytest.raises(ValueError):
        dataclasses.replace(demo, gamma_t=0.0)
    with pytest.raises(ValueError):
        dataclasses.replace(demo, mode="other")


def test_demo_names():
    assert set(DEMO_NAMES) == {"nominal", "receding", "obstacle", "receding_full"}
    for name in DEMO_NAMES:
        cfg = demo_scenario(name)
        scene = build_scene(cfg)
        assert scene.current.occupied_count > 0
    with pytest.raises(ValueError):
        demo_scenario("bogus")


def test_demo_scene_deltas():
    nominal = build_scene(demo_scenario("nominal"))
    assert np.array_equal(nominal.historical.occ, nominal.current.occ)
    receding = build_scene(demo_scenario("receding"))
    assert receding.current.occupied_count < receding.historical.occupied_count
    obstacle = build_scene(demo_scenario("obstacle"))
    assert obstacle.current.occupied_count > obstacle.historical.occupied_count


# ---------------------------------------------------------------- CLI


def test_cli_requires_config_or_demo(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path / "o")]) == 64
    assert main(["run", "--demo", "nominal", "--config", "x.yaml", "--out", str(tmp_path / "o")]) == 64


def test_cli_rejects_malformed_config_without_artifacts(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("version: 1\ntasks: []\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(bad), "--out", str(out)]) == 64
    assert not out.exists()  # no partial files


def test_cli_plan_writes_artifacts(tmp_path):
    out = tmp_path / "plan"
    assert main(["plan", "--demo", "nominal", "--out", str(out)]) == 0
    order = json.loads((out / "task_order.json").read_text())
    assert order[0]["task"] == "wall" and order[0]["reachable"]
    tour = json.loads((out / "tour_wall.json").read_text())
    assert len(tour["order"]) == 6
    lines = (out / "task_wall_viewpoints.csv").read_text().strip().splitlines()
    assert lines[0] == "index,x,y,z,psi,valid"
    assert len(lines) == 7


def test_cli_run_timeout_exit_code(tmp_path):
    import yaml

    cfg = yaml.safe_load(GOOD_YAML)
    cfg["max_sim_time"] = 1.0  # far too short to finish
    del cfg["maps"]["delta"]
    f = tmp_path / "scn.yaml"
    f.write_text(yaml.safe_dump(cfg))
    assert main(["run", "--config", str(f), "--out", str(tmp_path / "out")]) == 2


def test_cli_run_and_summary(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--demo", "nominal", "--out", str(out), "--seed", "5"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["completed"] is True
    assert summary["seed"] == 5
    assert (out / "mission_log.csv").exists()
    assert (out / "plots" / "similarity.dat").exists()
    pred = (out / "predicted_paths.csv").read_text().strip().splitlines()
    assert pred[0] == "t,pose_index,x,y,z,psi"
    assert len(pred) > 1


def test_cli_compare_shares_planning_artifacts(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--demo", "receding_full", "--out", str(out)]) == 0
    doc = json.loads((out / "compare.json").read_text())
    hashes = doc["tour_hashes"]["wall"]
    assert hashes["adaptive"] == hashes["baseline"]
    assert doc["adaptive"]["mean_utility"] > doc["baseline"]["mean_utility"]
    assert (out / "adaptive" / "mission_log.csv").exists()
    assert (out / "baseline" / "mission_log.csv").exists()


def test_cli_unreachable_task_exit_code(tmp_path):
    import yaml

    cfg = yaml.safe_load(GOOD_YAML)
    # Add a block engulfing the whole viewpoint line at x=4.
    cfg["maps"]["delta"]["additions"] = [{"lo": [3.0, -4.0, 0.0], "hi": [5.0, 4.0, 2.4]}]
    f = tmp_path / "scn.yaml"
    f.write_text(yaml.safe_dump(cfg))
    assert main(["plan", "--config", str(f), "--out", str(tmp_path / "out")]) == 3


def test_cli_missing_map_file_exit_code(tmp_path):
    f = tmp_path / "scn.yaml"
    f.write_text(
        "version: 1\nmaps:\n  historical: {file: nowhere.xyz}\n"
        "tasks:\n  - id: t\n    vertices: [[6,-1,0],[6,1,0],[6,1,1],[6,-1,1]]\n"
    )
    assert main(["run", "--config", str(f), "--out", str(tmp_path / "out")]) == 64
