"""Motion-field flow per candidate disparity and linear time shifting of events.

Flow is computed in normalised image coordinates and returned in pixels/s.
Because ``1/Z(d) = d / (f b)`` the flow at a pixel is affine in disparity:

    flow(d) = rotational + d * translational_per_disparity

which lets the volume builder evaluate every disparity slice from two
per-event vectors.
"""

from __future__ import annotations

import numpy as np

from .core import CameraRig, Event, Velocity


def depth_from_disparity(d, rig: CameraRig):
    """Z = f*b/d; raises for non-positive disparity."""
    d_arr = np.asarray(d, dtype=np.float64)
    if np.any(d_arr <= 0):
        raise ValueError("nonpositive-disparity: depth is undefined for d <= 0")
    z = rig.fb / d_arr
    return float(z) if z.ndim == 0 else z


def normalize(x_px, y_px, rig: CameraRig):
    return (np.asarray(x_px, dtype=np.float64) - rig.cx) / rig.f, (
        np.asarray(y_px, dtype=np.float64) - rig.cy
    ) / rig.f


def flow_components(x_px, y_px, vel: Velocity, rig: CameraRig):
    """Split the pixel flow into a depth-independent and a per-disparity part.

    Returns ``(rot_x, rot_y, trans_x, trans_y)`` in pixels/s such that the
    flow at disparity ``d`` is ``rot + d * trans``.
    """
    x, y = normalize(x_px, y_px, rig)
    vx, vy, vz = vel.v
    wx, wy, wz = vel.w
    rot_x = rig.f * (x * y * wx - (1.0 + x * x) * wy + y * wz)
    rot_y = rig.f * ((1.0 + y * y) * wx - x * y * wy - x * wz)
    # f * (1/Z) * [-1 0 x; 0 -1 y] v with 1/Z = d/(f b)  ->  d/b * (...)
    trans_x = (-vx + x * vz) / rig.b
    trans_y = (-vy + y * vz) / rig.b
    return rot_x, rot_y, trans_x, trans_y


def motion_field_flow(x_px, y_px, d, vel: Velocity, rig: CameraRig):
    """Image velocity (dx/dt, dy/dt) in pixels/s of a point at disparity ``d``.

    ``d = 0`` is a point at infinity: only the rotational term remains.
    """
    if np.any(np.asarray(d) < 0):
        raise ValueError("disparity must be non-negative")
    rot_x, rot_y, trans_x, trans_y = flow_components(x_px, y_px, vel, rig)
    return rot_x + d * trans_x, rot_y + d * trans_y


def time_shift(event: Event, d, t_ref: float, vel: Velocity, rig: CameraRig):
    """Un-rounded position of ``event`` linearly extrapolated to ``t_ref``."""
    fx, fy = motion_field_flow(event.x, event.y, d, vel, rig)
    dt = t_ref - event.t
    return event.x + fx * dt, event.y + fy * dt


def perturb_velocity(vel: Velocity, pct: float, seed=None) -> Velocity:
    """Add zero-mean Gaussian noise with variance ``pct * |v|`` (resp. ``|w|``).

    Linear and angular parts are perturbed independently, each component with
    the same variance.
    """
    if pct < 0:
        raise ValueError("noise percentage must be non-negative")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(6)
    sd_v = np.sqrt(pct * np.linalg.norm(vel.v))
    sd_w = np.sqrt(pct * np.linalg.norm(vel.w))
    if pct == 0:
        return vel
    return Velocity(vel.v + sd_v * noise[:3], vel.w + sd_w * noise[3:])
