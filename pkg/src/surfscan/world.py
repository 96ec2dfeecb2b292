"""Simulated world: occupancy voxel maps, morphology deltas, sensing.

The map is a dense boolean occupancy grid aligned to multiples of the voxel
size, standing in for a full volumetric mapping backend.  Sensing is
deterministic: a pinhole depth camera and an omnidirectional range scanner,
both implemented by DDA raycasts through the grid.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from . import kernels
from .depthcam import DepthImage, camera_axes_world
from .fileio import load_xyz
from .geometry import PointCloud, Pose6

__all__ = [
    "Box",
    "VoxelMap",
    "MorphologyDelta",
    "Scene",
    "load_map",
    "apply_delta",
    "render_depth",
    "sample_cloud",
    "is_collision_free",
    "fibonacci_directions",
]

DEFAULT_VOXEL_SIZE = 0.1


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by two corners (meters, world frame)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("Box corners must be 3-vectors")
        if any(not np.isfinite(v) for v in lo + hi):
            raise ValueError("Box corners must be finite")
        if any(h < l for l, h in zip(lo, hi)):
            raise ValueError(f"Box has hi < lo: {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


def _snap_down(value, h):
    return np.floor(value / h) * h


class VoxelMap:
    """Dense occupancy grid.  `origin` is the world position of the corner of
    voxel (0,0,0); voxel (i,j,k) occupies origin + [i,i+1)*h per axis."""

    def __init__(self, origin, voxel_size, occ):
        if voxel_size <= 0:
            raise ValueError("voxel_size must be positive")
        self.origin = np.asarray(origin, dtype=np.float64).copy()
        self.voxel_size = float(voxel_size)
        occ = np.ascontiguousarray(occ, dtype=np.bool_)
        if occ.ndim != 3:
            raise ValueError("occupancy grid must be 3-D")
        occ.setflags(write=False)
        self.occ = occ
        self._free_masks = {}

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls, bounds_lo, bounds_hi, voxel_size=DEFAULT_VOXEL_SIZE):
        h = float(voxel_size)
        lo = _snap_down(np.asarray(bounds_lo, dtype=np.float64), h)
        hi = np.asarray(bounds_hi, dtype=np.float64)
        shape = np.maximum(np.ceil((hi - lo) / h - 1e-9), 1).astype(int)
        return cls(lo, h, np.zeros(shape, dtype=np.bool_))

    @classmethod
    def from_points(cls, points, voxel_size=DEFAULT_VOXEL_SIZE, bounds=None):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if bounds is None:
            if points.shape[0] == 0:
                raise ValueError("cannot infer bounds from an empty point set")
            bounds = (points.min(axis=0), points.max(axis=0) + voxel_size)
        vmap = cls.empty(bounds[0], bounds[1], voxel_size)
        if points.shape[0]:
            occ = np.asarray(vmap.occ)
            occ.setflags(write=True)
            idx = np.floor((points - vmap.origin) / vmap.voxel_size).astype(int)
            idx = np.clip(idx, 0, np.array(occ.shape) - 1)
            occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True
            occ.setflags(write=False)
        return vmap

    @classmethod
    def from_boxes(cls, boxes, voxel_size=DEFAULT_VOXEL_SIZE, bounds=None):
        boxes = [b if isinstance(b, Box) else Box(*b) for b in boxes]
        if bounds is None:
            if not boxes:
                raise ValueError("cannot infer bounds without boxes")
            lo = np.min([b.lo for b in boxes], axis=0)
            hi = np.max([b.hi for b in boxes], axis=0)
            bounds = (lo, hi)
        vmap = cls.empty(bounds[0], bounds[1], voxel_size)
        occ = np.asarray(vmap.occ)
        occ.setflags(write=True)
        for b in boxes:
            i0, i1 = vmap._box_slices(b)
            occ[i0[0] : i1[0], i0[1] : i1[1], i0[2] : i1[2]] = True
        occ.setflags(write=False)
        return vmap

    # -- geometry helpers --------------------------------------------------

    def _box_slices(self, box):
        h = self.voxel_size
        lo = np.floor((np.asarray(box.lo) - self.origin) / h + 1e-9).astype(int)
        hi = np.ceil((np.asarray(box.hi) - self.origin) / h - 1e-9).astype(int)
        hi = np.maximum(hi, lo + 1)
        lo = np.clip(lo, 0, self.occ.shape)
        hi = np.clip(hi, 0, self.occ.shape)
        return lo, hi

    @property
    def shape(self):
        return self.occ.shape

    @property
    def bounds(self):
        return (
            self.origin.copy(),
            self.origin + np.array(self.occ.shape) * self.voxel_size,
        )

    @property
    def occupied_count(self):
        return int(np.count_nonzero(self.occ))

    def world_to_grid(self, p):
        return (np.asarray(p, dtype=np.float64) - self.origin) / self.voxel_size

    def grid_to_world(self, g):
        return self.origin + np.asarray(g, dtype=np.float64) * self.voxel_size

    def voxel_center(self, idx):
        return self.origin + (np.asarray(idx, dtype=np.float64) + 0.5) * self.voxel_size

    def voxel_index(self, p):
        g = np.floor(self.world_to_grid(p)).astype(int)
        if np.any(g < 0) or np.any(g >= np.array(self.occ.shape)):
            return None
        return tuple(g)

    def is_occupied(self, p):
        idx = self.voxel_index(p)
        return bool(self.occ[idx]) if idx is not None else False

    def occupied_centers(self):
        idx = np.argwhere(self.occ)
        return self.origin + (idx + 0.5) * self.voxel_size

    def surface_points(self):
        """Centers of occupied voxels with at least one exposed face."""
        if self.occupied_count == 0:
            return np.zeros((0, 3))
        core = ndimage.binary_erosion(
            self.occ, structure=ndimage.generate_binary_structure(3, 1), border_value=0
        )
        idx = np.argwhere(self.occ & ~core)
        return self.origin + (idx + 0.5) * self.voxel_size

    def free_mask(self, inflation):
        """Voxels whose centers keep at least `inflation` clearance from every
        occupied voxel box.  Cached per inflation value."""
        key = round(float(inflation), 9)
        mask = self._free_masks.get(key)
        if mask is None:
            r_vox = inflation / self.voxel_size
            reach = int(np.ceil(r_vox + 0.5))
            rng = np.arange(-reach, reach + 1)
            di, dj, dk = np.meshgrid(rng, rng, rng, indexing="ij")
            gap = np.sqrt(
                np.maximum(np.abs(di) - 0.5, 0.0) ** 2
                + np.maximum(np.abs(dj) - 0.5, 0.0) ** 2
                + np.maximum(np.abs(dk) - 0.5, 0.0) ** 2
            )
            elem = gap <= r_vox
            blocked = ndimage.binary_dilation(self.occ, structure=elem)
            mask = ~blocked
            mask.setflags(write=False)
            self._free_masks[key] = mask
        return mask


@dataclass(frozen=True)
class MorphologyDelta:
    """Scene change: regions cleared (removals) then filled (additions).
    Entries are Boxes or (N, 3) point arrays."""

    removals: tuple = ()
    additions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "removals", tuple(self.removals))
        object.__setattr__(self, "additions", tuple(self.additions))

    @property
    def is_empty(self):
        return not self.removals and not self.additions


def apply_delta(base, delta):
    """New map with the delta applied: removals clear voxels, then additions
    set them.  The grid grows if an addition falls outside current bounds."""
    if delta.is_empty:
        return VoxelMap(base.origin, base.voxel_size, base.occ)

    h = base.voxel_size
    lo, hi = base.bounds
    for item in delta.additions:
        if isinstance(item, Box):
            lo = np.minimum(lo, item.lo)
            hi = np.maximum(hi, item.hi)
        else:
            pts = np.asarray(item, dtype=np.float64).reshape(-1, 3)
            if pts.size:
                lo = np.minimum(lo, pts.min(axis=0))
                hi = np.maximum(hi, pts.max(axis=0) + h)

    if np.any(lo < base.bounds[0]) or np.any(hi > base.bounds[1]):
        grown = VoxelMap.empty(lo, hi, h)
        occ = np.asarray(grown.occ)
        occ.setflags(write=True)
        off = np.round((base.origin - grown.origin) / h).astype(int)
        sx, sy, sz = base.occ.shape
        occ[off[0] : off[0] + sx, off[1] : off[1] + sy, off[2] : off[2] + sz] = base.occ
        result = grown
    else:
        result = VoxelMap(base.origin, h, base.occ.copy())
        occ = np.asarray(result.occ)
        occ.setflags(write=True)

    for item in delta.removals:
        if isinstance(item, Box):
            i0, i1 = result._box_slices(item)
            occ[i0[0] : i1[0], i0[1] : i1[1], i0[2] : i1[2]] = False
        else:
            pts = np.asarray(item, dtype=np.float64).reshape(-1, 3)
            idx = np.floor((pts - result.origin) / h).astype(int)
            keep = np.all((idx >= 0) & (idx < np.array(occ.shape)), axis=1)
            idx = idx[keep]
            occ[idx[:, 0], idx[:, 1], idx[:, 2]] = False

    for item in delta.additions:
        if isinstance(item, Box):
            i0, i1 = result._box_slices(item)
            occ[i0[0] : i1[0], i0[1] : i1[1], i0[2] : i1[2]] = True
        else:
            pts = np.asarray(item, dtype=np.float64).reshape(-1, 3)
            idx = np.floor((pts - result.origin) / h).astype(int)
            idx = np.clip(idx, 0, np.array(occ.shape) - 1)
            occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True

    occ.setflags(write=False)
    return result


@dataclass(frozen=True)
class Scene:
    """Historical map, current map, and the delta connecting them."""

    historical: VoxelMap
    current: VoxelMap
    delta: Optional[MorphologyDelta] = None

    @classmethod
    def from_delta(cls, historical, delta):
        return cls(historical, apply_delta(historical, delta), delta)

    @classmethod
    def unchanged(cls, historical):
        return cls(historical, apply_delta(historical, MorphologyDelta()), MorphologyDelta())


def load_map(path, voxel_size=DEFAULT_VOXEL_SIZE, bounds=None, padding=0.0):
    """Voxelize an xyz point file.  `padding` grows the grid bounds (meters)
    on every side so planners have free space to work in."""
    points = load_xyz(path)
    if points.shape[0] == 0:
        raise ValueError(f"{path}: no points")
    if bounds is None:
        lo = points.min(axis=0) - padding
        hi = points.max(axis=0) + voxel_size + padding
        bounds = (lo, hi)
    return VoxelMap.from_points(points, voxel_size, bounds)


def fibonacci_directions(n):
    """n unit vectors spread over the sphere (deterministic spiral pattern)."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - 2.0 * (i + 0.5) / n
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    theta = golden * i
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def render_depth(vmap, pose, intrinsics, jitter_sigma=0.0, rng=None):
    """Raycast a depth image from the pose.  Depth is the distance along the
    optical axis to the first occupied voxel; misses are NaN.

    `jitter_sigma` adds seeded Gaussian noise to valid depths (off by
    default; pass a numpy Generator or seed to keep runs reproducible).
    """
    right, down, forward = camera_axes_world(pose)
    cam_dirs = intrinsics.pixel_directions()
    world_dirs = (
        cam_dirs[..., 0, None] * right
        + cam_dirs[..., 1, None] * down
        + cam_dirs[..., 2, None] * forward
    )
    origin_g = vmap.world_to_grid(pose.position)
    dirs_g = np.ascontiguousarray(
        world_dirs.reshape(-1, 3) / vmap.voxel_size, dtype=np.float64
    )
    t = kernels.raycast_batch(vmap.occ, origin_g, dirs_g, float(intrinsics.max_range))
    depth = t.reshape(intrinsics.height, intrinsics.width).copy()
    depth[depth <= 0.0] = np.nan
    if jitter_sigma > 0.0:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        valid = np.isfinite(depth)
        depth[valid] = np.clip(
            depth[valid] + rng.normal(0.0, jitter_sigma, size=int(valid.sum())),
            1e-6,
            intrinsics.max_range,
        )
    return DepthImage(depth, pose)


def sample_cloud(vmap, pose, max_range, ray_count):
    """Omnidirectional range scan: first-hit points for a Fibonacci-sphere ray
    pattern, world frame.  Rays that hit nothing within range are omitted."""
    if max_range <= 0:
        raise ValueError("max_range must be positive")
    pos = pose.position if isinstance(pose, Pose6) else np.asarray(pose, dtype=np.float64)
    dirs = fibonacci_directions(int(ray_count))
    origin_g = vmap.world_to_grid(pos)
    dirs_g = np.ascontiguousarray(dirs / vmap.voxel_size)
    t = kernels.raycast_batch(vmap.occ, origin_g, dirs_g, float(max_range))
    hit = t >= 0.0
    points = pos + dirs[hit] * t[hit, None]
    return PointCloud(points, frame="world")


def is_collision_free(vmap, target, inflation):
    """Clearance query.  `target` is a point or an (a, b) segment; segments
    are sampled every half voxel.  True iff no occupied voxel box lies within
    `inflation` of any tested point."""
    if inflation < 0:
        raise ValueError("inflation must be non-negative")
    r = inflation / vmap.voxel_size

    def point_free(p):
        g = vmap.world_to_grid(p)
        return bool(kernels.point_is_free(vmap.occ, g[0], g[1], g[2], r))

    if isinstance(target, (tuple, list)) and len(target) == 2 and np.ndim(target[0]) == 1:
        a = np.asarray(target[0], dtype=np.float64)
        b = np.asarray(target[1], dtype=np.float64)
        length = float(np.linalg.norm(b - a))
        n = max(int(np.ceil(length / (vmap.voxel_size / 2.0))), 1)
        for s in np.linspace(0.0, 1.0, n + 1):
            if not point_free(a + (b - a) * s):
                return False
        return True
    return point_free(np.asarray(target, dtype=np.float64))
