"""Disparity / depth error metrics and the ablation sweep."""

from __future__ import annotations

import csv
import itertools

import numpy as np

from .core import CameraRig, DisparityConfig, DisparityMap
from .pipeline import Recording, gt_batches, iter_batches

METRICS_HEADER = (
    "variant",
    "cost",
    "sync",
    "noise_pct",
    "window",
    "mean_disp_err",
    "mean_depth_err",
    "pct_within_1",
    "n_compared",
    "n_rejected",
)

COST_PREFIX = {"iou": "IoU", "intersection": "I", "time": "T"}


class EmptyComparisonError(ValueError):
    pass


def _comparison(est: DisparityMap, gt: np.ndarray):
    gt = np.asarray(gt, dtype=np.float64)
    if gt.shape != est.d_hat.shape:
        raise ValueError(f"ground truth shape {gt.shape} != estimate shape {est.d_hat.shape}")
    covered = est.has_events & np.isfinite(gt)
    return gt, covered & est.valid, covered & ~est.valid


def _summarise(d_est: np.ndarray, d_gt: np.ndarray, n_rej: int, rig: CameraRig) -> dict:
    n = int(d_est.size)
    if n == 0:
        raise EmptyComparisonError("empty-comparison: no pixel is valid, event-bearing and covered by ground truth")
    err = np.abs(d_est - d_gt)
    both = (d_est > 0) & (d_gt > 0)
    if both.any():
        mean_depth = float(np.abs(rig.fb / d_est[both] - rig.fb / d_gt[both]).mean())
    else:
        mean_depth = float("nan")
    within = int((err <= 1).sum())
    strict = int((err < 1).sum())
    return {
        "mean_disp_err": float(err.mean()),
        "mean_depth_err": mean_depth,
        "pct_within_1": 100.0 * within / n,
        "pct_within_1_strict": 100.0 * strict / n,
        "pct_within_1_of_covered": 100.0 * within / (n + n_rej),
        "n_compared": n,
        "n_rejected": n_rej,
    }


def disparity_metrics(est: DisparityMap, gt: np.ndarray, rig: CameraRig) -> dict:
    """Table-style errors over pixels that are valid, carry events and have ground truth.

    ``pct_within_1`` counts ``|err| <= 1``; the strict ``< 1`` variant and the
    percentage relative to all ground-truth-covered event pixels (rejected ones
    included) are reported alongside.
    """
    gt, compared, rejected = _comparison(est, gt)
    return _summarise(est.d_hat[compared].astype(np.float64), gt[compared], int(rejected.sum()), rig)


def pooled_metrics(pairs, rig: CameraRig) -> dict:
    """Metrics over the union of pixels from several (estimate, ground truth) pairs."""
    d_est, d_gt, n_rej = [np.zeros(0)], [np.zeros(0)], 0
    for est, gt in pairs:
        gt, compared, rejected = _comparison(est, gt)
        d_est.append(est.d_hat[compared].astype(np.float64))
        d_gt.append(gt[compared])
        n_rej += int(rejected.sum())
    return _summarise(np.concatenate(d_est), np.concatenate(d_gt), n_rej, rig)


def variant_name(cost: str, sync: bool) -> str:
    return f"{COST_PREFIX[cost]}-{'S' if sync else 'NS'}"


def metrics_row(variant, cost, sync, noise_pct, window, m) -> dict:
    row = {
        "variant": variant,
        "cost": cost,
        "sync": int(bool(sync)),
        "noise_pct": noise_pct,
        "window": window,
    }
    row.update({k: m[k] for k in METRICS_HEADER[5:]})
    return row


def write_metrics_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_HEADER, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in ("mean_disp_err", "mean_depth_err", "pct_within_1"):
                out[key] = f"{row[key]:.6f}"
            writer.writerow(out)


def evaluate_recording(rec: Recording, cfg: DisparityConfig, cost="iou", sync=True, noise_pct=0.0, seed=0) -> dict:
    """Process every batch and pool metrics over the batches scored against ground truth."""
    if rec.gt is None:
        raise ValueError("recording has no ground truth")
    results = list(iter_batches(rec, cfg, cost=cost, sync=sync, noise_pct=noise_pct, seed=seed))
    scored = gt_batches([r.t_ref for r in results], rec.gt)
    if not scored:
        raise EmptyComparisonError("empty-comparison: no complete batch")
    return pooled_metrics([(results[i].disparity, rec.gt.disparity) for i in scored], rec.rig)


def ablation_runner(
    rec: Recording,
    variants=(("iou", True),),
    noise_pcts=(0.0,),
    window_sides=(24,),
    cfg: DisparityConfig | None = None,
    seed: int = 0,
) -> list[dict]:
    """One metrics row per (cost, sync, noise, window) combination, in input order."""
    cfg = cfg or DisparityConfig()
    rows = []
    for (cost, sync), pct, side in itertools.product(variants, noise_pcts, window_sides):
        run_cfg = DisparityConfig(cfg.d_min, cfg.d_max, side, cfg.eps_c, cfg.eps_n, cfg.num_events)
        m = evaluate_recording(rec, run_cfg, cost=cost, sync=sync, noise_pct=pct, seed=seed)
        rows.append(metrics_row(variant_name(cost, sync), cost, sync, pct, side, m))
    return rows
