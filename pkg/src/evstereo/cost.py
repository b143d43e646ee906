"""Window-summed union / intersection matching costs over disparity volumes.

Window sums are separable: one running sum along rows then one along columns,
with windows truncated at the image border.  For side ``s`` the output pixel
sits at offset ``(s - 1) // 2`` inside its window, so even windows extend one
pixel further right/down than left/up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .core import NO_TIMESTAMP, UNDEFINED_COST, CostVolume, EventDisparityVolume, TimestampVolume

COST_KINDS = ("iou", "intersection", "time")


@dataclass(frozen=True)
class WindowSpec:
    side: int = 24

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("window side must be >= 1")

    @property
    def anchor(self) -> int:
        return (self.side - 1) // 2

    @property
    def area(self) -> int:
        return self.side * self.side

    def check_shape(self, height: int, width: int) -> None:
        if self.side > min(height, width):
            raise ValueError(f"window side {self.side} exceeds image {width}x{height}")


def pixel_union(a, b):
    """1 where either voxel holds an event."""
    return ((np.asarray(a) != 0) | (np.asarray(b) != 0)).astype(np.int32)


def pixel_intersection(a, b):
    """1 where both voxels hold an event of the same polarity."""
    a = np.asarray(a)
    b = np.asarray(b)
    return ((a == b) & (a != 0)).astype(np.int32)


@njit
def _box_rows_numba(src, out, lo_off, hi_off):
    # src, out: (N, L); out[:, c] = sum src[:, max(c-lo_off,0) : min(c+hi_off, L-1)+1]
    n, length = src.shape
    for r in range(n):
        acc = src[r, 0] * 0
        # running window [c - lo_off, c + hi_off]
        for j in range(min(hi_off, length - 1) + 1):
            acc += src[r, j]
        for c in range(length):
            out[r, c] = acc
            add = c + hi_off + 1
            if add < length:
                acc += src[r, add]
            drop = c - lo_off
            if drop >= 0:
                acc -= src[r, drop]


def _box_axis_numba(arr, axis, side):
    anchor = (side - 1) // 2
    moved = np.moveaxis(arr, axis, -1)
    flat = np.ascontiguousarray(moved).reshape(-1, moved.shape[-1])
    out = np.empty_like(flat)
    _box_rows_numba(flat, out, anchor, side - 1 - anchor)
    return np.moveaxis(out.reshape(moved.shape), -1, axis)


def _box_axis_numpy(arr, axis, side):
    anchor = (side - 1) // 2
    n = arr.shape[axis]
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (1, 0)
    csum = np.pad(np.cumsum(arr, axis=axis), pad)
    idx = np.arange(n)
    hi = np.minimum(idx - anchor + side, n)
    lo = np.maximum(idx - anchor, 0)
    return np.take(csum, hi, axis=axis) - np.take(csum, lo, axis=axis)


def window_sum(field: np.ndarray, spec: WindowSpec) -> np.ndarray:
    """Sum over each pixel's (truncated) window on the last two axes.

    Integer input gives exact int64 sums; leading axes (disparity) are batched.
    """
    field = np.asarray(field)
    dtype = np.int64 if (np.issubdtype(field.dtype, np.integer) or field.dtype == bool) else np.float64
    arr = field.astype(dtype)
    box = _box_axis_numba if _accel.USE_NUMBA else _box_axis_numpy
    return box(box(arr, -1, spec.side), -2, spec.side)


def window_area(height: int, width: int, spec: WindowSpec) -> np.ndarray:
    """In-bounds pixel count of each pixel's window."""
    return window_sum(np.ones((height, width), dtype=np.int64), spec)


def _check_pair(left, right):
    if left.values.shape != right.values.shape or left.d_min != right.d_min:
        raise ValueError("left and right volumes must share shape and disparity range")


def union_intersection_sums(left: EventDisparityVolume, right: EventDisparityVolume, spec: WindowSpec):
    _check_pair(left, right)
    c_u = window_sum(pixel_union(left.values, right.values), spec)
    c_i = window_sum(pixel_intersection(left.values, right.values), spec)
    return c_i, c_u


def iou_from_sums(c_i: np.ndarray, c_u: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(c_u > 0, -c_i / np.maximum(c_u, 1), UNDEFINED_COST)


def iou_cost_volume(left: EventDisparityVolume, right: EventDisparityVolume, spec: WindowSpec) -> CostVolume:
    """Negative intersection-over-union per voxel; ``UNDEFINED_COST`` for empty windows."""
    c_i, c_u = union_intersection_sums(left, right, spec)
    return CostVolume(c_i, c_u, iou_from_sums(c_i, c_u), left.d_min, left.d_max)


def intersection_cost_volume(left, right, spec: WindowSpec) -> CostVolume:
    """Ablation cost: negative intersection count alone."""
    c_i, c_u = union_intersection_sums(left, right, spec)
    cost = np.where(c_u > 0, -c_i.astype(np.float64), UNDEFINED_COST)
    return CostVolume(c_i, c_u, iou_from_sums(c_i, c_u), left.d_min, left.d_max, cost=cost, kind="intersection")


def timestamp_term(t_left, t_right, c_u, alpha: float = 1.0):
    """Per-voxel similarity ``1 / ((alpha*|tL - tR| + 1) * C_U)``; 0 if a timestamp is missing."""
    t_left = np.asarray(t_left, dtype=np.float64)
    t_right = np.asarray(t_right, dtype=np.float64)
    c_u = np.asarray(c_u)
    both = (t_left != NO_TIMESTAMP) & (t_right != NO_TIMESTAMP) & (c_u > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        dt = np.abs(t_left - t_right)
        return np.where(both, 1.0 / ((alpha * dt + 1.0) * np.maximum(c_u, 1)), 0.0)


def timestamp_cost_volume(
    left_t: TimestampVolume,
    right_t: TimestampVolume,
    c_u: np.ndarray,
    spec: WindowSpec,
    alpha: float = 1.0,
) -> np.ndarray:
    """Negated window sum of :func:`timestamp_term`.

    ``c_u`` holds the union window sums; empty-union windows get
    ``UNDEFINED_COST``.
    """
    summed = window_sum(timestamp_term(left_t.values, right_t.values, c_u, alpha), spec)
    return np.where(c_u > 0, -summed, UNDEFINED_COST)


def time_cost_volume(left, right, left_t, right_t, spec: WindowSpec, alpha: float = 1.0) -> CostVolume:
    c_i, c_u = union_intersection_sums(left, right, spec)
    cost = timestamp_cost_volume(left_t, right_t, c_u, spec, alpha)
    return CostVolume(c_i, c_u, iou_from_sums(c_i, c_u), left.d_min, left.d_max, cost=cost, kind="time")
