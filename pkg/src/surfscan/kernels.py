"""Numeric inner loops: voxel raycasting, clearance scans, path DP.

Everything here is written as plain loops over numpy arrays so the same
source runs either JIT-compiled (numba) or as pure Python, depending on
:mod:`surfscan._accel`.  All coordinates handed to these kernels are in
*grid units* (world meters divided by voxel size, relative to the grid
origin) unless noted otherwise.
"""

import math

import numpy as np

from ._accel import njit

__all__ = [
    "raycast_batch",
    "point_is_free",
    "frechet_dp",
    "nearest_point_scan",
    "normals_from_depth",
]


@njit(cache=True)
def _ray_first_hit(occ, ox, oy, oz, dx, dy, dz, t_cap):
    """March one ray through the occupancy grid (Amanatides-Woo DDA).

    Origin and direction are in grid units; the returned value is the ray
    parameter t at which the ray enters the first occupied voxel, or -1.0
    for a miss.  t is capped at t_cap.  Hit points therefore lie exactly on
    voxel boundaries (or at t=0 when the origin is inside an occupied voxel).
    """
    nx, ny, nz = occ.shape

    # Clip the ray against the grid AABB [0,nx]x[0,ny]x[0,nz].
    t_enter = 0.0
    t_exit = t_cap
    for axis in range(3):
        if axis == 0:
            o, d, n = ox, dx, nx
        elif axis == 1:
            o, d, n = oy, dy, ny
        else:
            o, d, n = oz, dz, nz
        if d == 0.0:
            if o < 0.0 or o > n:
                return -1.0
        else:
            t0 = (0.0 - o) / d
            t1 = (n - o) / d
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > t_enter:
                t_enter = t0
            if t1 < t_exit:
                t_exit = t1
    if t_enter > t_exit:
        return -1.0

    t = t_enter
    px = ox + dx * t
    py = oy + dy * t
    pz = oz + dz * t
    ix = int(math.floor(px))
    iy = int(math.floor(py))
    iz = int(math.floor(pz))
    if ix < 0:
        ix = 0
    if ix > nx - 1:
        ix = nx - 1
    if iy < 0:
        iy = 0
    if iy > ny - 1:
        iy = ny - 1
    if iz < 0:
        iz = 0
    if iz > nz - 1:
        iz = nz - 1

    step_x = 1 if dx > 0.0 else -1
    step_y = 1 if dy > 0.0 else -1
    step_z = 1 if dz > 0.0 else -1

    inf = np.inf
    if dx > 0.0:
        tmax_x = t + ((ix + 1) - px) / dx
        tdel_x = 1.0 / dx
    elif dx < 0.0:
        tmax_x = t + (px - ix) / -dx
        tdel_x = 1.0 / -dx
    else:
        tmax_x = inf
        tdel_x = inf
    if dy > 0.0:
        tmax_y = t + ((iy + 1) - py) / dy
        tdel_y = 1.0 / dy
    elif dy < 0.0:
        tmax_y = t + (py - iy) / -dy
        tdel_y = 1.0 / -dy
    else:
        tmax_y = inf
        tdel_y = inf
    if dz > 0.0:
        tmax_z = t + ((iz + 1) - pz) / dz
        tdel_z = 1.0 / dz
    elif dz < 0.0:
        tmax_z = t + (pz - iz) / -dz
        tdel_z = 1.0 / -dz
    else:
        tmax_z = inf
        tdel_z = inf

    while t <= t_exit:
        if occ[ix, iy, iz]:
            return t
        # Advance into the next voxel; ties broken x, then y, then z.
        if tmax_x <= tmax_y and tmax_x <= tmax_z:
            t = tmax_x
            ix += step_x
            tmax_x += tdel_x
            if ix < 0 or ix >= nx:
                return -1.0
        elif tmax_y <= tmax_z:
            t = tmax_y
            iy += step_y
            tmax_y += tdel_y
            if iy < 0 or iy >= ny:
                return -1.0
        else:
            t = tmax_z
            iz += step_z
            tmax_z += tdel_z
            if iz < 0 or iz >= nz:
                return -1.0
    return -1.0


@njit(cache=True)
def raycast_batch(occ, origin, dirs, t_cap):
    """First-hit parameter for a batch of rays from a common origin.

    origin: (3,) grid-unit coordinates.  dirs: (R,3) directions (any scale;
    the returned t is in the caller's parameterization).  Misses are -1.0.
    """
    n = dirs.shape[0]
    out = np.empty(n, dtype=np.float64)
    for r in range(n):
        out[r] = _ray_first_hit(
            occ,
            origin[0],
            origin[1],
            origin[2],
            dirs[r, 0],
            dirs[r, 1],
            dirs[r, 2],
            t_cap,
        )
    return out


@njit(cache=True)
def point_is_free(occ, gx, gy, gz, radius):
    """True iff no occupied voxel box lies within `radius` of the point.

    Point and radius are in grid units; voxel i,j,k occupies the box
    [i,i+1]x[j,j+1]x[k,k+1].  Distances are point-to-box.
    """
    nx, ny, nz = occ.shape
    r2 = radius * radius
    i0 = int(math.floor(gx - radius))
    i1 = int(math.floor(gx + radius))
    j0 = int(math.floor(gy - radius))
    j1 = int(math.floor(gy + radius))
    k0 = int(math.floor(gz - radius))
    k1 = int(math.floor(gz + radius))
    if i0 < 0:
        i0 = 0
    if j0 < 0:
        j0 = 0
    if k0 < 0:
        k0 = 0
    if i1 > nx - 1:
        i1 = nx - 1
    if j1 > ny - 1:
        j1 = ny - 1
    if k1 > nz - 1:
        k1 = nz - 1
    for i in range(i0, i1 + 1):
        ddx = 0.0
        if gx < i:
            ddx = i - gx
        elif gx > i + 1:
            ddx = gx - (i + 1)
        for j in range(j0, j1 + 1):
            ddy = 0.0
            if gy < j:
                ddy = j - gy
            elif gy > j + 1:
                ddy = gy - (j + 1)
            dxy2 = ddx * ddx + ddy * ddy
            if dxy2 > r2:
                continue
            for k in range(k0, k1 + 1):
                if not occ[i, j, k]:
                    continue
                ddz = 0.0
                if gz < k:
                    ddz = k - gz
                elif gz > k + 1:
                    ddz = gz - (k + 1)
                if dxy2 + ddz * ddz <= r2:
                    return False
    return True


@njit(cache=True)
def frechet_dp(a, b):
    """Discrete Frechet distance between point sequences a (n,3) and b (m,3)
    via the standard O(n*m) coupling dynamic program."""
    n = a.shape[0]
    m = b.shape[0]
    ca = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            dz = a[i, 2] - b[j, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if i == 0 and j == 0:
                prev = 0.0
            elif i == 0:
                prev = ca[0, j - 1]
            elif j == 0:
                prev = ca[i - 1, 0]
            else:
                prev = min(ca[i - 1, j], ca[i - 1, j - 1], ca[i, j - 1])
            ca[i, j] = d if d > prev else prev
    return ca[n - 1, m - 1]


@njit(cache=True)
def nearest_point_scan(points, qx, qy, qz):
    """Index and distance of the point nearest to q; ties keep the lowest index."""
    best = -1
    best2 = np.inf
    for i in range(points.shape[0]):
        dx = points[i, 0] - qx
        dy = points[i, 1] - qy
        dz = points[i, 2] - qz
        d2 = dx * dx + dy * dy + dz * dz
        if d2 < best2:
            best2 = d2
            best = i
    return best, math.sqrt(best2)


@njit(cache=True)
def normals_from_depth(depth, fx, fy, cx, cy, jump):
    """Per-pixel unit surface normals (camera frame, +z optical axis).

    Central differences of back-projected neighbors; pixels at the border,
    with any invalid neighbor (nan), or across a depth discontinuity larger
    than `jump` are returned as nan.  Normals are oriented toward the camera
    (n . pixel_ray < 0).
    """
    h, w = depth.shape
    out = np.full((h, w, 3), np.nan, dtype=np.float64)
    for v in range(1, h - 1):
        for u in range(1, w - 1):
            zc = depth[v, u]
            zl = depth[v, u - 1]
            zr = depth[v, u + 1]
            zu = depth[v - 1, u]
            zd = depth[v + 1, u]
            if (
                math.isnan(zc)
                or math.isnan(zl)
                or math.isnan(zr)
                or math.isnan(zu)
                or math.isnan(zd)
            ):
                continue
            if (
                abs(zr - zc) > jump
                or abs(zl - zc) > jump
                or abs(zu - zc) > jump
                or abs(zd - zc) > jump
            ):
                continue
            # Back-projected tangents along image u (right) and v (down).
            txx = ((u + 1) - cx) / fx * zr - ((u - 1) - cx) / fx * zl
            txy = (v - cy) / fy * (zr - zl)
            txz = zr - zl
            tyx = (u - cx) / fx * (zd - zu)
            tyy = ((v + 1) - cy) / fy * zd - ((v - 1) - cy) / fy * zu
            tyz = zd - zu
            nxv = txy * tyz - txz * tyy
            nyv = txz * tyx - txx * tyz
            nzv = txx * tyy - txy * tyx
            norm = math.sqrt(nxv * nxv + nyv * nyv + nzv * nzv)
            if norm < 1e-15:
                continue
            nxv /= norm
            nyv /= norm
            nzv /= norm
            # Flip to face the camera.
            rx = (u - cx) / fx
            ry = (v - cy) / fy
            if nxv * rx + nyv * ry + nzv > 0.0:
                nxv = -nxv
                nyv = -nyv
                nzv = -nzv
            out[v, u, 0] = nxv
            out[v, u, 1] = nyv
            out[v, u, 2] = nzv
    return out
