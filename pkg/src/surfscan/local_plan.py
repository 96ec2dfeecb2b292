"""Reactive local view planning from instantaneous range sensing.

The next view pose is computed from the nearest observed surface point: an
ego frame is built around the robot-to-surface direction, the range error
to the desired viewing distance drives the approach term, and the camera
overlap constraints drive the lateral and vertical sweep steps.  Local
paths are predicted by recursing this rule over a horizon with fresh
virtual sensing at every predicted pose.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import (
    DegenerateGeometryError,
    NoSurfaceError,
    PathSegment,
    Pose6,
    ViewPose4,
    nearest_point,
)
from .global_plan import ViewConstraints
from .world import sample_cloud

__all__ = ["LocalPlanConfig", "ego_frame", "compute_next_view_pose", "predict_local_path"]

UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class LocalPlanConfig:
    """Constraints plus prediction horizon and sensing setup for the local
    planner.  `z_band` clamps predicted heights (ground robot); None keeps
    the full vertical term."""

    constraints: ViewConstraints = field(default_factory=ViewConstraints)
    horizon: int = 5
    z_band: Optional[tuple] = None
    sense_range: float = 12.0
    sense_rays: int = 2048

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.sense_range <= 0 or self.sense_rays < 1:
            raise ValueError("invalid sensing parameters")


def ego_frame(position, p_nn):
    """Orthonormal view vectors around the robot-to-surface direction:
    nu_x toward the surface, nu_y lateral (up x nu_x), nu_z completing the
    right-handed frame."""
    d = np.asarray(p_nn, dtype=np.float64) - np.asarray(position, dtype=np.float64)
    r = float(np.linalg.norm(d))
    if r < 1e-12:
        raise DegenerateGeometryError("surface point coincides with the robot position")
    nu_x = d / r
    lateral = np.cross(UP, nu_x)
    ln = float(np.linalg.norm(lateral))
    if ln < 1e-9:
        raise DegenerateGeometryError("surface directly above/below the robot: ego frame undefined")
    nu_y = lateral / ln
    nu_z = np.cross(nu_x, nu_y)
    return nu_x, nu_y, nu_z, r


def compute_next_view_pose(odom, cloud, cfg, sweep_sign=1.0):
    """Next constraint-satisfying view pose from the instantaneous cloud.

    The approach term closes the gap between the sensed range and the
    desired viewing distance; the lateral step advances by the horizontal
    overlap footprint in the direction of `sweep_sign`; the vertical step
    applies the vertical overlap footprint, clamped to the configured height
    band.  Yaw faces the nearest surface point.
    """
    pos = odom.position if isinstance(odom, Pose6) else np.asarray(odom, dtype=np.float64)
    p_nn, _ = nearest_point(cloud, pos)
    return _next_pose_from_nn(pos, p_nn, cfg, sweep_sign)


def _next_pose_from_nn(pos, p_nn, cfg, sweep_sign):
    c = cfg.constraints
    nu_x, nu_y, nu_z, r = ego_frame(pos, p_nn)
    d_insp = r - c.d_view
    d_hov = 2.0 * np.tan(c.alpha / 2.0) * r * (1.0 - c.gamma_h)
    d_vov = 2.0 * np.tan(c.beta / 2.0) * r * (1.0 - c.gamma_v)
    nxt = pos + nu_x * d_insp + nu_y * (float(sweep_sign) * d_hov) + nu_z * d_vov
    if cfg.z_band is not None:
        lo, hi = cfg.z_band
        nxt = nxt.copy()
        nxt[2] = min(max(nxt[2], lo), hi)
    psi = float(np.arctan2(nu_x[1], nu_x[0]))
    return ViewPose4(nxt[0], nxt[1], nxt[2], psi)


def _sweep_sign_toward(pos, p_nn, guide_pos):
    """Lateral direction that advances toward the guide pose (+1 on ties)."""
    _, nu_y, _, _ = ego_frame(pos, p_nn)
    return 1.0 if float(nu_y @ (guide_pos - pos)) >= 0.0 else -1.0


def predict_local_path(odom, vmap, guide, cfg, first_cloud=None):
    """Predict the local inspection path over the horizon.

    One pose is predicted per guide pose (the supervisor sizes the guide to
    the horizon, shrinking it near the tour end).  Each step re-senses the
    scene at the previously predicted pose (fresh virtual scan of `vmap`)
    and applies the next-view rule with the lateral sweep directed toward
    the corresponding guide pose.  Returns (path, short): `short` is True
    when sensing came up empty at a virtual pose and the prediction was
    truncated.  Raises NoSurfaceError when nothing is visible from the
    starting pose itself.
    """
    guide = guide if isinstance(guide, PathSegment) else PathSegment(guide)
    pos = odom.position if isinstance(odom, Pose6) else np.asarray(odom, dtype=np.float64)
    poses = []
    short = False
    for i in range(len(guide)):
        if i == 0 and first_cloud is not None:
            cloud = first_cloud
        else:
            cloud = sample_cloud(vmap, pos, cfg.sense_range, cfg.sense_rays)
        if cloud.is_empty:
            if i == 0:
                raise NoSurfaceError("no surface visible from the planning pose")
            short = True
            break
        p_nn, _ = nearest_point(cloud, pos)
        g = guide[min(i, len(guide) - 1)].position
        sign = _sweep_sign_toward(pos, p_nn, g)
        nxt = _next_pose_from_nn(pos, p_nn, cfg, sign)
        poses.append(nxt)
        pos = nxt.position
    if not poses:
        raise NoSurfaceError("no surface visible from the planning pose")
    return PathSegment(poses), short
