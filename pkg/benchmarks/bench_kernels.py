#!/usr/bin/env python3
"""Benchmark the hot kernels: numba-jitted vs pure-Python fallback.

The same source backs both paths (`kernel` vs `kernel.py_func`), which is
also what you get by running the package with SURFSCAN_NUMBA=0.  The
pure-Python reference runs on reduced workloads; reported times are
normalized per work unit so the speedup column is comparable.

Run: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from surfscan import kernels
from surfscan._accel import NUMBA_ENABLED, py_func
from surfscan.depthcam import CameraIntrinsics
from surfscan.geometry import Pose6
from surfscan.world import Box, VoxelMap, render_depth


def timeit(fn, *args, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_raycast():
    vmap = VoxelMap.from_boxes(
        [Box((6.0, -5.0, 0.0), (6.4, 5.0, 2.4))],
        0.1,
        bounds=((-1.0, -7.0, 0.0), (10.0, 7.0, 2.4)),
    )
    cam = CameraIntrinsics(alpha=np.deg2rad(69.5), beta=np.deg2rad(45.0), width=160, height=120, max_range=8.0)
    pose = Pose6(4.0, 0.0, 1.2)
    dirs = cam.pixel_directions().reshape(-1, 3) / vmap.voxel_size
    origin = vmap.world_to_grid(pose.position)
    n_rays = dirs.shape[0]

    render_depth(vmap, pose, cam)  # compile
    t_jit = timeit(kernels.raycast_batch, vmap.occ, origin, dirs, 8.0)
    small = dirs[:: max(n_rays // 400, 1)]
    t_py = timeit(py_func(kernels.raycast_batch), vmap.occ, origin, small, 8.0, repeat=1)
    return "depth raycast", n_rays, t_jit / n_rays, t_py / small.shape[0]


def bench_frechet():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(200, 3))
    b = rng.normal(size=(200, 3))
    kernels.frechet_dp(a, b)
    t_jit = timeit(kernels.frechet_dp, a, b)
    t_py = timeit(py_func(kernels.frechet_dp), a[:60], b[:60], repeat=1)
    return "frechet dp", a.shape[0] * b.shape[0], t_jit / (200 * 200), t_py / (60 * 60)


def bench_clearance():
    rng = np.random.default_rng(1)
    occ = np.ascontiguousarray(rng.random((120, 120, 24)) < 0.02)
    pts = rng.uniform(5, 100, size=(2000, 3))
    pts[:, 2] = rng.uniform(2, 20, size=2000)
    kernels.point_is_free(occ, 1.0, 1.0, 1.0, 5.0)

    def run(fn, p):
        for x, y, z in p:
            fn(occ, x, y, z, 5.0)

    t_jit = timeit(run, kernels.point_is_free, pts)
    t_py = timeit(run, py_func(kernels.point_is_free), pts[:100], repeat=1)
    return "clearance scan", pts.shape[0], t_jit / 2000, t_py / 100


def bench_normals():
    rng = np.random.default_rng(2)
    depth = rng.uniform(1.5, 2.5, size=(120, 160))
    kernels.normals_from_depth(depth, 80.0, 80.0, 79.5, 59.5, 0.3)
    t_jit = timeit(kernels.normals_from_depth, depth, 80.0, 80.0, 79.5, 59.5, 0.3)
    small = depth[:40, :40]
    t_py = timeit(py_func(kernels.normals_from_depth), small, 80.0, 80.0, 19.5, 19.5, 0.3, repeat=1)
    return "normal map", depth.size, t_jit / depth.size, t_py / small.size


def main():
    print(f"numba enabled: {NUMBA_ENABLED}")
    if not NUMBA_ENABLED:
        print("(set SURFSCAN_NUMBA=1 or install numba to compare against the jitted path)")
    print(f"{'kernel':<16}{'work units':>12}{'jit / unit':>14}{'python / unit':>16}{'speedup':>10}")
    for bench in (bench_raycast, bench_frechet, bench_clearance, bench_normals):
        name, units, jit_unit, py_unit = bench()
        speed = py_unit / jit_unit if jit_unit > 0 else float("inf")
        print(f"{name:<16}{units:>12}{jit_unit * 1e6:>11.2f} us{py_unit * 1e6:>13.2f} us{speed:>9.1f}x")


if __name__ == "__main__":
    main()
