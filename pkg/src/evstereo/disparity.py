"""Winner-takes-all disparity selection, outlier rejection and depth conversion."""

from __future__ import annotations

import numpy as np

from .core import INVALID_DISPARITY, CameraRig, CostVolume, DisparityConfig, DisparityMap
from .cost import WindowSpec, window_area


def winner_takes_all(costs: CostVolume, has_events: np.ndarray | None = None) -> DisparityMap:
    """Per-pixel argmin over disparity; ties go to the smallest disparity.

    Pixels whose costs are all undefined (+inf) are marked invalid.
    """
    cost = costs.cost
    idx = np.argmin(cost, axis=0)
    valid = np.isfinite(np.min(cost, axis=0))
    d_hat = np.where(valid, idx + costs.d_min, costs.d_min)
    if has_events is None:
        has_events = np.zeros(valid.shape, dtype=bool)
    return DisparityMap(d_hat, valid, has_events)


def _at_estimate(volume: np.ndarray, dmap: DisparityMap, d_min: int) -> np.ndarray:
    k = (dmap.d_hat - d_min)[None, :, :]
    return np.take_along_axis(volume, k, axis=0)[0]


def match_ratio(dmap: DisparityMap, costs: CostVolume) -> np.ndarray:
    """C_I / C_U at the chosen disparity (0 where the union is empty)."""
    c_i = _at_estimate(costs.c_i, dmap, costs.d_min).astype(np.float64)
    c_u = _at_estimate(costs.c_u, dmap, costs.d_min).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(c_u > 0, c_i / np.maximum(c_u, 1), 0.0)


def reject_outliers(
    dmap: DisparityMap, costs: CostVolume, cfg: DisparityConfig, spec: WindowSpec
) -> DisparityMap:
    """Drop weak matches (C_I/C_U < eps_c) and thin windows (C_U < eps_n * |W|).

    ``|W|`` is the in-bounds window area at each pixel.
    """
    c_u = _at_estimate(costs.c_u, dmap, costs.d_min)
    ratio = match_ratio(dmap, costs)
    area = window_area(c_u.shape[0], c_u.shape[1], spec)
    keep = (ratio >= cfg.eps_c) & (c_u >= cfg.eps_n * area)
    return dmap.replace(valid=dmap.valid & keep)


def disparity_to_depth(dmap: DisparityMap, rig: CameraRig) -> np.ndarray:
    """Depth in metres; +inf where d = 0, NaN where the pixel is invalid."""
    d = dmap.d_hat.astype(np.float64)
    with np.errstate(divide="ignore"):
        z = np.where(d > 0, rig.fb / np.where(d > 0, d, 1.0), np.inf)
    return np.where(dmap.valid, z, np.nan)


def to_pgm_array(dmap: DisparityMap, sparse: bool = True) -> np.ndarray:
    mask = dmap.sparse if sparse else dmap.valid
    return np.where(mask, dmap.d_hat, INVALID_DISPARITY).astype(np.uint16)


def sparse_records(dmap: DisparityMap, costs: CostVolume):
    """(x, y, d, cost_ratio) rows for every reported pixel, row-major order."""
    ratio = match_ratio(dmap, costs)
    ys, xs = np.nonzero(dmap.sparse)
    return [(int(x), int(y), int(dmap.d_hat[y, x]), float(ratio[y, x])) for y, x in zip(ys, xs)]


def write_sparse_csv(path, dmap: DisparityMap, costs: CostVolume) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,d,cost_ratio\n")
        for x, y, d, r in sparse_records(dmap, costs):
            fh.write(f"{x},{y},{d},{r:.6f}\n")
