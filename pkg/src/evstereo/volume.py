"""Time-synchronised event disparity volumes for the left and right cameras."""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit
from .core import (
    NO_TIMESTAMP,
    CameraRig,
    DisparityConfig,
    EventBatch,
    EventDisparityVolume,
    TimestampVolume,
    Velocity,
)
from .motion import flow_components


def round_half_away(v):
    """Nearest integer, ties away from zero (numpy rounds ties to even)."""
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


@njit
def _round_half_away_scalar(v):
    if v >= 0.0:
        return math.floor(v + 0.5)
    return -math.floor(-v + 0.5)


@njit
def _scatter_sign_numba(x, y, p, dt, rot_x, rot_y, tr_x, tr_y, disparities, right, width, height):
    nd = disparities.shape[0]
    n = x.shape[0]
    acc = np.zeros((nd, height, width), dtype=np.int32)
    for k in range(nd):
        d = disparities[k]
        for i in range(n):
            xs = _round_half_away_scalar(x[i] + (rot_x[i] + d * tr_x[i]) * dt[i])
            ys = _round_half_away_scalar(y[i] + (rot_y[i] + d * tr_y[i]) * dt[i])
            if right:
                xs += d
            if xs < 0.0 or xs >= width or ys < 0.0 or ys >= height:
                continue
            acc[k, int(ys), int(xs)] += p[i]
    out = np.empty((nd, height, width), dtype=np.int8)
    for k in range(nd):
        for r in range(height):
            for c in range(width):
                a = acc[k, r, c]
                out[k, r, c] = 1 if a > 0 else (-1 if a < 0 else 0)
    return out


@njit
def _scatter_max_t_numba(x, y, t, dt, rot_x, rot_y, tr_x, tr_y, disparities, right, width, height):
    nd = disparities.shape[0]
    n = x.shape[0]
    out = np.full((nd, height, width), -np.inf)  # NO_TIMESTAMP
    for k in range(nd):
        d = disparities[k]
        for i in range(n):
            xs = _round_half_away_scalar(x[i] + (rot_x[i] + d * tr_x[i]) * dt[i])
            ys = _round_half_away_scalar(y[i] + (rot_y[i] + d * tr_y[i]) * dt[i])
            if right:
                xs += d
            if xs < 0.0 or xs >= width or ys < 0.0 or ys >= height:
                continue
            r, c = int(ys), int(xs)
            if t[i] > out[k, r, c]:
                out[k, r, c] = t[i]
    return out


def _flat_targets(x, y, dt, rot_x, rot_y, tr_x, tr_y, disparities, right, width, height):
    d = disparities[:, None].astype(np.float64)
    xs = round_half_away(x[None, :] + (rot_x[None, :] + d * tr_x[None, :]) * dt[None, :])
    ys = round_half_away(y[None, :] + (rot_y[None, :] + d * tr_y[None, :]) * dt[None, :])
    if right:
        xs = xs + d
    keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    k = np.broadcast_to(np.arange(len(disparities))[:, None], xs.shape)
    flat = (k[keep] * height + ys[keep].astype(np.int64)) * width + xs[keep].astype(np.int64)
    return flat, keep


def _scatter_sign_numpy(x, y, p, dt, rot_x, rot_y, tr_x, tr_y, disparities, right, width, height):
    nd = len(disparities)
    flat, keep = _flat_targets(x, y, dt, rot_x, rot_y, tr_x, tr_y, disparities, right, width, height)
    weights = np.broadcast_to(p.astype(np.float64)[None, :], keep.shape)[keep]
    sums = np.bincount(flat, weights=weights, minlength=nd * height * width)
    return np.sign(sums).astype(np.int8).reshape(nd, height, width)


def _scatter_max_t_numpy(x, y, t, dt, rot_x, rot_y, tr_x, tr_y, disparities, right, width, height):
    nd = len(disparities)
    flat, keep = _flat_targets(x, y, dt, rot_x, rot_y, tr_x, tr_y, disparities, right, width, height)
    out = np.full(nd * height * width, NO_TIMESTAMP)
    np.maximum.at(out, flat, np.broadcast_to(t[None, :], keep.shape)[keep])
    return out.reshape(nd, height, width)


def scatter_sign(*args):
    if _accel.USE_NUMBA:
        return _scatter_sign_numba(*args)
    return _scatter_sign_numpy(*args)


def scatter_max_t(*args):
    if _accel.USE_NUMBA:
        return _scatter_max_t_numba(*args)
    return _scatter_max_t_numpy(*args)


def reference_time(events: EventBatch) -> float:
    return events.t_last if len(events) else 0.0


def _kernel_args(events, vel, rig, cfg, sync, t_ref):
    x = events.x.astype(np.float64)
    y = events.y.astype(np.float64)
    if sync:
        rot_x, rot_y, tr_x, tr_y = (
            np.ascontiguousarray(a, dtype=np.float64) for a in flow_components(x, y, vel, rig)
        )
        dt = t_ref - events.t
    else:
        rot_x = rot_y = tr_x = tr_y = np.zeros(len(events))
        dt = np.zeros(len(events))
    return x, y, dt, rot_x, rot_y, tr_x, tr_y, cfg.disparities


def _build(events, vel, rig, cfg, sync, t_ref, right):
    if t_ref is None:
        t_ref = reference_time(events)
    x, y, dt, rx, ry, tx, ty, disp = _kernel_args(events, vel, rig, cfg, sync, t_ref)
    p = events.p.astype(np.int32)
    values = scatter_sign(x, y, p, dt, rx, ry, tx, ty, disp, right, rig.width, rig.height)
    return EventDisparityVolume(values, cfg.d_min, cfg.d_max, float(t_ref))


def build_left_volume(
    events: EventBatch,
    vel: Velocity,
    rig: CameraRig,
    cfg: DisparityConfig,
    sync: bool = True,
    t_ref: float | None = None,
) -> EventDisparityVolume:
    """Signed event image per disparity from left events shifted to ``t_ref``.

    ``t_ref`` defaults to the last event timestamp.  With ``sync=False`` events
    stay at their recorded pixel in every slice.
    """
    return _build(events, vel, rig, cfg, sync, t_ref, right=False)


def build_right_volume(
    events: EventBatch,
    vel: Velocity,
    rig: CameraRig,
    cfg: DisparityConfig,
    sync: bool = True,
    t_ref: float | None = None,
) -> EventDisparityVolume:
    """Like :func:`build_left_volume`, with slice ``d`` translated by ``+d`` columns."""
    return _build(events, vel, rig, cfg, sync, t_ref, right=True)


def build_timestamp_volumes(
    left: EventBatch,
    right: EventBatch,
    vel: Velocity,
    rig: CameraRig,
    cfg: DisparityConfig,
    sync: bool = True,
    t_ref: float | None = None,
) -> tuple[TimestampVolume, TimestampVolume]:
    """Latest original timestamp landing on each voxel; ``NO_TIMESTAMP`` where empty."""
    if t_ref is None:
        t_ref = reference_time(left)
    out = []
    for events, is_right in ((left, False), (right, True)):
        x, y, dt, rx, ry, tx, ty, disp = _kernel_args(events, vel, rig, cfg, sync, t_ref)
        vals = scatter_max_t(x, y, events.t, dt, rx, ry, tx, ty, disp, is_right, rig.width, rig.height)
        out.append(TimestampVolume(vals, cfg.d_min, cfg.d_max))
    return out[0], out[1]


def event_mask(events: EventBatch, rig: CameraRig) -> np.ndarray:
    """Pixels touched by at least one raw event."""
    mask = np.zeros(rig.shape, dtype=bool)
    mask[events.y, events.x] = True
    return mask
