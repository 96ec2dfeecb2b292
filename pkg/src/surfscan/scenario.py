"""Mission scenario configuration: YAML schema, validation, demo scenes.

A scenario bundles the world (historical map plus an optional delta or
pre-built current map), the inspection tasks, the robot, and all planner
parameters.  The built-in demos synthesize small box-world scenes covering
the standard evaluation setups without external map files.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .depthcam import CameraIntrinsics
from .geometry import Pose6, PolygonROI
from .global_plan import InspectionTask, ViewConstraints
from .world import Box, MorphologyDelta, Scene, VoxelMap, load_map

__all__ = ["ScenarioConfig", "load_scenario", "demo_scenario", "build_scene", "DEMO_NAMES"]

SCHEMA_VERSION = 1
DEMO_NAMES = ("nominal", "receding", "obstacle", "receding_full")


@dataclass(frozen=True)
class MapSpec:
    """Where a map comes from: an xyz file or inline boxes."""

    file: str = None
    boxes: tuple = ()

    def build(self, voxel_size, bounds, base_dir=None):
        if self.file:
            path = Path(self.file)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return load_map(path, voxel_size, bounds=bounds, padding=1.0 if bounds is None else 0.0)
        if not self.boxes:
            raise ValueError("map spec needs either a file or boxes")
        return VoxelMap.from_boxes(self.boxes, voxel_size, bounds=bounds)


@dataclass(frozen=True)
class TaskSpec:
    id: str
    vertices: tuple

    def to_task(self, constraints):
        return InspectionTask(
            id=self.id, roi=PolygonROI(np.asarray(self.vertices, dtype=np.float64)), constraints=constraints
        )


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    mode: str = "adaptive"  # adaptive | baseline
    seed: int = 1
    voxel_size: float = 0.1
    inflation: float = 0.5
    dt: float = 0.1
    max_sim_time: float = 120.0
    gamma_t: float = 0.5
    horizon: int = 5
    pos_tol: float = 0.3
    yaw_tol: float = 0.2
    z_band: tuple = (0.6, 0.6)
    start: tuple = (0.0, 0.0, 0.6, 0.0)  # x y z psi
    v_max: float = 0.8
    w_max: float = 1.0
    view: ViewConstraints = field(default_factory=ViewConstraints)
    camera: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(
            alpha=np.deg2rad(69.5), beta=np.deg2rad(45.0), width=80, height=60, max_range=5.0
        )
    )
    sense_range: float = 12.0
    sense_rays: int = 2048
    odom_sigma_xy: float = 0.0
    odom_sigma_psi: float = 0.0
    bounds: tuple = None  # ((lo), (hi)) world AABB for the voxel grids
    historical: MapSpec = None
    current: MapSpec = None
    delta: MorphologyDelta = None
    tasks: tuple = ()

    def __post_init__(self):
        if self.mode not in ("adaptive", "baseline"):
            raise ValueError(f"mode must be adaptive or baseline, got {self.mode!r}")
        if self.voxel_size <= 0 or self.dt <= 0 or self.max_sim_time <= 0:
            raise ValueError("voxel_size, dt and max_sim_time must be positive")
        if self.inflation < 0:
            raise ValueError("inflation must be non-negative")
        if not (0.0 < self.gamma_t <= 1.0):
            raise ValueError("gamma_t must lie in (0, 1]")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.pos_tol <= 0 or self.yaw_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not self.tasks:
            raise ValueError("no tasks defined")
        if self.historical is None:
            raise ValueError("historical map is required")

    @property
    def start_pose(self):
        x, y, z, psi = self.start
        return Pose6(x, y, z, 0.0, 0.0, psi)

    def task_objects(self):
        return [t.to_task(self.view) for t in self.tasks]


def build_scene(cfg, base_dir=None):
    """Materialize the world of a scenario config."""
    historical = cfg.historical.build(cfg.voxel_size, cfg.bounds, base_dir)
    if cfg.current is not None:
        current = cfg.current.build(cfg.voxel_size, cfg.bounds, base_dir)
        return Scene(historical=historical, current=current, delta=None)
    if cfg.delta is not None:
        return Scene.from_delta(historical, cfg.delta)
    return Scene.unchanged(historical)


def _parse_box(entry):
    return Box(tuple(entry["lo"]), tuple(entry["hi"]))


def _parse_map_spec(entry):
    if entry is None:
        return None
    if "file" in entry:
        return MapSpec(file=str(entry["file"]))
    if "boxes" in entry:
        return MapSpec(boxes=tuple(_parse_box(b) for b in entry["boxes"]))
    raise ValueError("map spec must contain 'file' or 'boxes'")


def load_scenario(path):
    """Parse and validate a YAML scenario file."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: scenario must be a mapping")
    version = raw.get("version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema version {version!r} (expected {SCHEMA_VERSION})")

    view_raw = raw.get("view", {})
    view = ViewConstraints(
        d_view=float(view_raw.get("d_view", 2.0)),
        gamma_h=float(view_raw.get("gamma_h", 0.6)),
        gamma_v=float(view_raw.get("gamma_v", 0.6)),
        alpha=np.deg2rad(float(view_raw.get("alpha_deg", 69.5))),
        beta=np.deg2rad(float(view_raw.get("beta_deg", 45.0))),
    )
    cam_raw = raw.get("camera", {})
    camera = CameraIntrinsics(
        alpha=np.deg2rad(float(cam_raw.get("alpha_deg", np.rad2deg(view.alpha)))),
        beta=np.deg2rad(float(cam_raw.get("beta_deg", np.rad2deg(view.beta)))),
        width=int(cam_raw.get("width", 80)),
        height=int(cam_raw.get("height", 60)),
        max_range=float(cam_raw.get("max_range", 5.0)),
    )
    maps_raw = raw.get("maps", {})
    delta_raw = maps_raw.get("delta")
    delta = None
    if delta_raw is not None:
        delta = MorphologyDelta(
            removals=tuple(_parse_box(b) for b in delta_raw.get("removals", [])),
            additions=tuple(_parse_box(b) for b in delta_raw.get("additions", [])),
        )
    bounds_raw = maps_raw.get("bounds")
    bounds = (tuple(bounds_raw["lo"]), tuple(bounds_raw["hi"])) if bounds_raw else None
    sensing = raw.get("sensing", {})
    robot = raw.get("robot", {})
    tasks = tuple(
        TaskSpec(id=str(t["id"]), vertices=tuple(tuple(v) for v in t["vertices"]))
        for t in raw.get("tasks", [])
    )

    try:
        return ScenarioConfig(
            name=str(raw.get("name", path.stem)),
            mode=str(raw.get("mode", "adaptive")),
            seed=int(raw.get("seed", 1)),
            voxel_size=float(raw.get("voxel_size", 0.1)),
            inflation=float(raw.get("inflation", 0.5)),
            dt=float(raw.get("dt", 0.1)),
            max_sim_time=float(raw.get("max_sim_time", 120.0)),
            gamma_t=float(raw.get("gamma_t", 0.5)),
            horizon=int(raw.get("horizon", 5)),
            pos_tol=float(raw.get("pos_tol", 0.3)),
            yaw_tol=float(raw.get("yaw_tol", 0.2)),
            z_band=tuple(raw.get("z_band", (0.6, 0.6))),
            start=tuple(robot.get("start", (0.0, 0.0, 0.6, 0.0))),
            v_max=float(robot.get("v_max", 0.8)),
            w_max=float(robot.get("w_max", 1.0)),
            view=view,
            camera=camera,
            sense_range=float(sensing.get("range", 12.0)),
            sense_rays=int(sensing.get("rays", 2048)),
            odom_sigma_xy=float(sensing.get("odom_sigma_xy", 0.0)),
            odom_sigma_psi=float(sensing.get("odom_sigma_psi", 0.0)),
            bounds=bounds,
            historical=_parse_map_spec(maps_raw.get("historical")),
            current=_parse_map_spec(maps_raw.get("current")),
            delta=delta,
            tasks=tasks,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed scenario: {exc}") from exc


# -- built-in demo scenes ---------------------------------------------------

_BOUNDS = ((-1.0, -8.0, 0.0), (12.0, 7.0, 2.4))
_WALL_TASK = TaskSpec(
    id="wall",
    vertices=((6.0, -3.0, 0.0), (6.0, 3.0, 0.0), (6.0, 3.0, 2.0), (6.0, -3.0, 2.0)),
)


def demo_scenario(name, mode="adaptive", seed=1):
    """Built-in scenario generators for the standard evaluation setups.

    nominal        flat wall, current scene identical to the historical map
    receding       material removed from half of the face: the surface
                   recedes 1 m over y in [-3, 0], unchanged elsewhere
    obstacle       nominal scene plus a new obstruction across the approach
                   route (forces a detour on the current map)
    receding_full  the whole face receded 1.2 m beyond the camera's range,
                   used for adaptive-vs-baseline comparisons
    """
    if name not in DEMO_NAMES:
        raise ValueError(f"unknown demo {name!r}; choose from {DEMO_NAMES}")

    common = dict(
        name=f"demo-{name}",
        mode=mode,
        seed=seed,
        bounds=_BOUNDS,
        tasks=(_WALL_TASK,),
        start=(4.0, -5.0, 0.6, 0.0),
        max_sim_time=90.0,
    )

    if name == "nominal":
        historical = MapSpec(boxes=(Box((6.0, -3.0, 0.0), (6.4, 3.0, 2.4)),))
        return ScenarioConfig(historical=historical, **common)

    if name == "receding":
        # A wider face whose surface recedes 1 m over y in [-3, 0] and
        # tapers back to the unchanged surface by y = 2: the deviation is
        # coherent at the start of the tour and decays smoothly, so the
        # planner replans early and recaptures the global plan well before
        # the tour ends.
        historical = MapSpec(boxes=(Box((6.0, -3.0, 0.0), (7.4, 6.0, 2.4)),))
        removals = []
        y = -3.0
        while y < 2.0 - 1e-9:
            depth = 1.0 if y < 0.0 else max(1.0 - 0.5 * (y + 0.05), 0.0)
            depth = round(depth * 10.0) / 10.0
            if depth > 0.0:
                removals.append(Box((6.0, round(y, 9), 0.0), (6.0 + depth, round(y + 0.1, 9), 2.4)))
            y += 0.1
        delta = MorphologyDelta(removals=tuple(removals))
        common["horizon"] = 3  # keep the alignment window inside the coherent region
        common["tasks"] = (
            TaskSpec(
                id="wall",
                vertices=((6.0, -3.0, 0.0), (6.0, 6.0, 0.0), (6.0, 6.0, 2.0), (6.0, -3.0, 2.0)),
            ),
        )
        return ScenarioConfig(historical=historical, delta=delta, **common)

    if name == "obstacle":
        historical = MapSpec(boxes=(Box((6.0, -3.0, 0.0), (6.4, 3.0, 2.4)),))
        delta = MorphologyDelta(additions=(Box((1.5, -5.6, 0.0), (5.5, -5.2, 1.4)),))
        common["start"] = (4.0, -6.5, 0.6, 0.0)
        return ScenarioConfig(historical=historical, delta=delta, **common)

    # receding_full
    historical = MapSpec(
        boxes=(
            Box((6.0, -3.0, 0.0), (7.2, 3.0, 2.4)),  # material later removed
            Box((7.2, -3.0, 0.0), (7.6, 3.0, 2.4)),  # surface behind the removal
        )
    )
    delta = MorphologyDelta(removals=(Box((6.0, -3.0, 0.0), (7.2, 3.0, 2.4)),))
    camera = CameraIntrinsics(
        alpha=np.deg2rad(69.5), beta=np.deg2rad(45.0), width=80, height=60, max_range=3.0
    )
    return ScenarioConfig(historical=historical, delta=delta, camera=camera, **common)


def with_mode(cfg, mode):
    return replace(cfg, mode=mode)
