import itertools

import numpy as np
import pytest

from surfscan.geometry import PolygonROI, Pose6, point_in_polygon, polygon_basis
from surfscan.global_plan import (
    InspectionTask,
    RouteError,
    TaskUnreachableError,
    ViewConstraints,
    filter_viewpoints,
    generate_grid_viewpoints,
    plan_route,
    prioritize_tasks,
    solve_tour_sa_tsp,
)
from surfscan.world import Box, VoxelMap


def make_task(verts, tid="t", **kw):
    return InspectionTask(id=tid, roi=PolygonROI(np.asarray(verts, dtype=float)), constraints=ViewConstraints(**kw))


WALL_6X2 = [[6, -3, 0], [6, 3, 0], [6, 3, 2], [6, -3, 2]]


# ---------------------------------------------------------------- oracles


def brute_force_open_tour(start, positions):
    n = len(positions)
    best = None
    best_cost = np.inf
    for perm in itertools.permutations(range(n)):
        pts = np.vstack([start, positions[list(perm)]])
        cost = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
        if cost < best_cost:
            best_cost, best = cost, perm
    return best, best_cost


def nearest_neighbor_cost(start, positions):
    remaining = list(range(len(positions)))
    cur = np.asarray(start, dtype=float)
    cost = 0.0
    while remaining:
        d = [np.linalg.norm(positions[i] - cur) for i in remaining]
        k = int(np.argmin(d))
        cost += d[k]
        cur = positions[remaining.pop(k)]
    return cost


# ---------------------------------------------------------------- constraints


def test_view_constraints_spacing_values():
    c = ViewConstraints()
    assert c.spacing_h == pytest.approx(2 * 2 * np.tan(np.deg2rad(34.75)) * 0.4, abs=1e-12)
    assert c.spacing_v == pytest.approx(2 * 2 * np.tan(np.deg2rad(22.5)) * 0.4, abs=1e-12)
    assert round(c.spacing_h, 3) == 1.110
    assert round(c.spacing_v, 3) == 0.663


def test_view_constraints_zero_overlap_full_footprint():
    c = ViewConstraints(gamma_h=0.0)
    assert c.spacing_h == pytest.approx(c.footprint_w)
    assert round(c.spacing_h, 3) == 2.775


def test_view_constraints_rejects_unit_overlap():
    with pytest.raises(ValueError):
        ViewConstraints(gamma_h=1.0)


# ---------------------------------------------------------------- grid viewpoints


def test_grid_wall_projection_and_yaw():
    # 4 m x 2 m wall at x=4, normal facing -x; robot side at x < 4.
    verts = [[4, 0, 0], [4, 0, 2], [4, 4, 2], [4, 4, 0]]
    task = make_task(verts)
    plan = generate_grid_viewpoints(task, toward=[0.0, 2.0, 1.0])
    assert len(plan) > 0
    for vp in plan.viewpoints:
        assert vp.x == pytest.approx(2.0, abs=1e-9)
        assert vp.psi == pytest.approx(0.0, abs=1e-12)  # looks back at the surface (+x)


def test_grid_viewpoints_distance_spacing_membership():
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0])
    roi = task.roi
    n = roi.normal
    c = task.constraints
    for vp in plan.viewpoints:
        d = abs(float((vp.position - roi.centroid) @ n))
        assert d == pytest.approx(c.d_view, abs=1e-9)
    for g in plan.grid_points:
        assert point_in_polygon(roi, g)
    # Same-row spacing is exactly the horizontal grid spacing.
    u, v = polygon_basis(roi)
    su = plan.grid_points @ u
    sv = plan.grid_points @ v
    for row in np.unique(np.round(sv, 6)):
        cols = np.sort(su[np.round(sv, 6) == row])
        if len(cols) > 1:
            assert np.allclose(np.diff(cols), c.spacing_h, atol=1e-9)


def test_grid_footprint_coverage():
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0])
    roi = task.roi
    c = task.constraints
    u, v = polygon_basis(roi)
    gu = plan.grid_points @ u
    gv = plan.grid_points @ v
    # Sample the ROI interior and check footprint-rectangle coverage.
    us = np.arange(-3 + 0.05, 3.0, 0.1)
    vs = np.arange(-1 + 0.05, 1.0, 0.1)
    covered = total = 0
    for uu in us:
        for vv in vs:
            total += 1
            if np.any(
                (np.abs(gu - (roi.centroid @ u + uu)) <= c.footprint_w / 2)
                & (np.abs(gv - (roi.centroid @ v + vv)) <= c.footprint_h / 2)
            ):
                covered += 1
    assert covered / total >= 0.99


def test_grid_z_band_collapses_rows():
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0], z_band=(0.6, 0.6))
    assert plan.clamped
    zs = {vp.z for vp in plan.viewpoints}
    assert zs == {0.6}
    assert len(plan) == 6  # one row of six columns


def test_grid_sparse_fallback():
    # Small diamond: the grid anchor (bounding-box corner) lies outside it.
    tiny = make_task([[6, 0.01, 0], [6, 0.02, 0.01], [6, 0.01, 0.02], [6, 0.0, 0.01]])
    plan = generate_grid_viewpoints(tiny, toward=[0.0, 0.0, 0.0])
    assert plan.sparse
    assert len(plan) == 1
    assert np.allclose(plan.viewpoints[0].position, [4.0, 0.01, 0.01], atol=1e-9)


def test_grid_horizontal_roi_uses_principal_axes():
    # Floor patch (normal vertical): the grid falls back to the plane's
    # principal axes and projects viewpoints straight up.
    floor = make_task([[0, 0, 0], [4, 0, 0], [4, 2, 0], [0, 2, 0]])
    plan = generate_grid_viewpoints(floor, toward=[2.0, 1.0, 3.0])
    assert len(plan) > 0
    for vp in plan.viewpoints:
        assert vp.z == pytest.approx(2.0, abs=1e-9)
    for g in plan.grid_points:
        assert point_in_polygon(floor.roi, g)


# ---------------------------------------------------------------- filtering


def test_filter_empty_map_keeps_all():
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0], z_band=(0.6, 0.6))
    vmap = VoxelMap.empty((-1, -7, 0), (10, 7, 2.4), 0.1)
    out = filter_viewpoints(plan, vmap, 0.5)
    assert out.valid.all()


def test_filter_drops_engulfed_viewpoint():
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0], z_band=(0.6, 0.6))
    vp = plan.viewpoints[2]
    vmap = VoxelMap.from_boxes(
        [Box((vp.x - 0.2, vp.y - 0.2, vp.z - 0.2), (vp.x + 0.2, vp.y + 0.2, vp.z + 0.2))],
        0.1,
        bounds=((-1, -7, 0), (10, 7, 2.4)),
    )
    out = filter_viewpoints(plan, vmap, 0.5)
    assert not out.valid[2]
    assert out.valid.sum() == len(plan) - 1


def test_filter_all_invalid_raises(wall_map):
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0], z_band=(0.6, 0.6))
    blocker = VoxelMap.from_boxes([Box((3, -4, 0), (5, 4, 2.4))], 0.1, bounds=((-1, -7, 0), (10, 7, 2.4)))
    with pytest.raises(TaskUnreachableError):
        filter_viewpoints(plan, blocker, 0.5)


# ---------------------------------------------------------------- routing


def empty_map_10x10():
    return VoxelMap.empty((-1, -5, 0), (11, 5, 1.2), 0.1)


def test_plan_route_start_equals_goal():
    vmap = empty_map_10x10()
    wps, length = plan_route(vmap, [0, 0, 0.6], [0, 0, 0.6], 0.5)
    assert length == 0.0
    assert len(wps) == 1


def test_plan_route_straight_line():
    vmap = empty_map_10x10()
    wps, length = plan_route(vmap, [0, 0, 0.6], [5, 0, 0.6], 0.5)
    assert length == pytest.approx(5.0, abs=3 * 0.1 * np.sqrt(3))


def test_plan_route_through_gap_matches_dijkstra():
    # Wall across the middle with a single gap.
    wall = Box((5.0, -5.0, 0.0), (5.4, 5.0, 1.2))
    vmap = VoxelMap.from_boxes([wall], 0.1, bounds=((-1, -5, 0), (11, 5, 1.2)))
    occ = np.asarray(vmap.occ)
    occ.setflags(write=True)
    gap_lo = vmap.world_to_grid([5.0, 1.0, 0.0]).astype(int)
    gap_hi = vmap.world_to_grid([5.4, 2.6, 1.2]).astype(int)
    occ[gap_lo[0] : gap_hi[0], gap_lo[1] : gap_hi[1], :] = False
    occ.setflags(write=False)
    start, goal = [2.05, 0.05, 0.55], [8.05, 0.05, 0.55]
    wps, length = plan_route(vmap, start, goal, 0.5)
    ys = [w[1] for w in wps]
    assert max(ys) > 1.0  # detours through the gap
    _, dij = plan_route(vmap, start, goal, 0.5, heuristic=False)
    assert length == pytest.approx(dij, abs=1e-9)


def test_plan_route_unreachable_goal(wall_map):
    with pytest.raises(RouteError):
        plan_route(wall_map, [4.0, 0.0, 0.6], [6.2, 0.0, 0.6], 0.5)  # goal inside the wall


def test_plan_route_astar_equals_dijkstra_random(rng):
    boxes = [
        Box((2.0, -2.0, 0.0), (3.0, 2.0, 1.2)),
        Box((5.0, 0.0, 0.0), (6.0, 5.0, 1.2)),
        Box((7.0, -4.0, 0.0), (8.0, 1.0, 1.2)),
    ]
    vmap = VoxelMap.from_boxes(boxes, 0.2, bounds=((-1, -5, 0), (11, 5, 1.2)))
    def free_point():
        while True:
            p = np.array([rng.uniform(0, 10), rng.uniform(-4.5, 4.5), 0.5])
            try:
                plan_route(vmap, p, p, 0.4)
                return p
            except RouteError:
                continue

    checked = 0
    while checked < 50:
        a, b = free_point(), free_point()
        try:
            _, la = plan_route(vmap, a, b, 0.4)
        except RouteError:  # disconnected pockets under inflation
            continue
        _, ld = plan_route(vmap, a, b, 0.4, heuristic=False)
        assert la == pytest.approx(ld, abs=1e-9)
        checked += 1


# ---------------------------------------------------------------- prioritization


def test_prioritize_single_task(wall_map):
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0], z_band=(0.6, 0.6))
    ranked = prioritize_tasks([task], [plan], Pose6(4, -5, 0.6), wall_map, 0.5, z_band=(0.6, 0.6))
    assert len(ranked) == 1 and ranked[0].reachable


def test_prioritize_orders_by_route_length(wall_map):
    near = make_task(WALL_6X2, tid="near")
    far_verts = [[6, -3, 0], [6, 3, 0], [6, 3, 2], [6, -3, 2]]
    far = make_task(far_verts, tid="far")
    plan_near = generate_grid_viewpoints(near, toward=[0, 0, 1], z_band=(0.6, 0.6))
    plan_far = generate_grid_viewpoints(far, toward=[0, 0, 1], z_band=(0.6, 0.6))
    # Robot sits next to one end: "near" viewpoints start at y=-3.
    robot = Pose6(4.0, -4.0, 0.6)
    ranked = prioritize_tasks([far, near], [plan_far, plan_near], robot, wall_map, 0.5, z_band=(0.6, 0.6))
    # Identical geometry: tie broken by id ("far" < "near").
    assert [r.task.id for r in ranked] == ["far", "near"]
    assert ranked[0].route_length == pytest.approx(ranked[1].route_length, abs=1e-9)


def test_prioritize_flags_unreachable_task(wall_map):
    task = make_task(WALL_6X2)
    plan = generate_grid_viewpoints(task, toward=[0.0, 0.0, 1.0], z_band=(0.6, 0.6))
    # Robot boxed in on all sides: no route to any viewpoint.
    from surfscan.world import Box, VoxelMap

    cage = VoxelMap.from_boxes(
        [
            Box((2.0, -6.0, 0.0), (2.4, -4.0, 2.4)),
            Box((5.6, -6.0, 0.0), (6.0, -4.0, 2.4)),
            Box((2.0, -6.0, 0.0), (6.0, -5.6, 2.4)),
            Box((2.0, -4.4, 0.0), (6.0, -4.0, 2.4)),
        ],
        0.1,
        bounds=((-1, -7, 0), (10, 7, 2.4)),
    )
    ranked = prioritize_tasks([task], [plan], Pose6(4.0, -5.0, 0.6), cage, 0.5, z_band=(0.6, 0.6))
    assert not ranked[0].reachable
    assert ranked[0].route_length == np.inf


def test_tour_poses_helper():
    plan = plan_from_positions([[0, 0, 0], [1, 0, 0], [2, 0, 0]])
    tour = solve_tour_sa_tsp(plan, [-1.0, 0.0, 0.0], seed=1)
    poses = tour.poses(plan)
    assert len(poses) == 3
    assert np.allclose(poses.positions[:, 0], [0, 1, 2])


# ---------------------------------------------------------------- SA-TSP


def plan_from_positions(positions):
    from surfscan.geometry import ViewPose4
    from surfscan.global_plan import ViewPlan

    vps = tuple(ViewPose4(x, y, z, 0.0) for x, y, z in positions)
    return ViewPlan(
        task_id="t",
        viewpoints=vps,
        valid=np.ones(len(vps), dtype=bool),
        grid_points=np.asarray(positions, dtype=float),
    )


def test_tour_single_viewpoint():
    plan = plan_from_positions([[3.0, 4.0, 0.0]])
    tour = solve_tour_sa_tsp(plan, [0.0, 0.0, 0.0], seed=1)
    assert tour.order == (0,)
    assert tour.length == pytest.approx(5.0)


def test_tour_unit_square_optimal():
    corners = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
    plan = plan_from_positions(corners)
    tour = solve_tour_sa_tsp(plan, [0.0, 0.0, 0.0], seed=1)
    assert tour.length == pytest.approx(3.0, abs=1e-9)


def test_tour_within_5pct_of_bruteforce(rng):
    for trial in range(10):
        n = int(rng.integers(4, 9))
        positions = rng.uniform(0, 10, size=(n, 3))
        positions[:, 2] = 0.0
        start = rng.uniform(0, 10, size=3)
        start[2] = 0.0
        _, opt = brute_force_open_tour(start, positions)
        plan = plan_from_positions(positions)
        for seed in range(1, 4):
            tour = solve_tour_sa_tsp(plan, start, seed=seed)
            assert tour.length <= opt * 1.05 + 1e-9
            assert tour.length <= nearest_neighbor_cost(start, positions) + 1e-9


def test_tour_deterministic_and_monotone(rng):
    positions = rng.uniform(0, 8, size=(10, 3))
    plan = plan_from_positions(positions)
    h1, h2 = [], []
    t1 = solve_tour_sa_tsp(plan, [0, 0, 0], seed=7, history=h1)
    t2 = solve_tour_sa_tsp(plan, [0, 0, 0], seed=7, history=h2)
    assert t1.order == t2.order and t1.length == t2.length
    assert h1 == h2
    assert all(b <= a + 1e-12 for a, b in zip(h1, h1[1:]))  # best-so-far non-increasing
