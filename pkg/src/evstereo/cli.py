"""Command line entry point: ``evstereo {run,synth,ablate,bench}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io as evio
from ._accel import backend_name
from .core import DisparityConfig
from .cost import COST_KINDS
from .pipeline import PipelineError, Recording, RunConfig, run

log = logging.getLogger("evstereo")


def _add_algorithm_flags(p: argparse.ArgumentParser) -> None:
    d = DisparityConfig()
    p.add_argument("--min-disparity", type=int, default=d.d_min)
    p.add_argument("--max-disparity", type=int, default=d.d_max)
    p.add_argument("--window", type=int, default=d.window, help="square window side in pixels")
    p.add_argument("--eps-c", type=float, default=d.eps_c, help="minimum C_I/C_U match ratio")
    p.add_argument("--eps-n", type=float, default=d.eps_n, help="minimum union support as a fraction of |W|")
    p.add_argument("--num-events", type=int, default=d.num_events, help="left events per batch")


def _add_input_flags(p: argparse.ArgumentParser, required=True) -> None:
    p.add_argument("--events-left", required=required)
    p.add_argument("--events-right", required=required)
    p.add_argument("--calib", required=required)
    p.add_argument("--velocity", required=required)
    p.add_argument("--gt")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evstereo", description="Velocity-synchronised event stereo.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="estimate disparity for every batch of a recording")
    _add_input_flags(p)
    p.add_argument("--out", required=True)
    _add_algorithm_flags(p)
    p.add_argument("--cost", choices=COST_KINDS, default="iou")
    p.add_argument("--no-sync", action="store_true", help="use raw event positions in every slice")
    p.add_argument("--noise-pct", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-volumes", action="store_true")
    p.add_argument("--dump-costs", action="store_true")
    p.add_argument("--print-config", action="store_true", help="echo the effective parameters and exit")

    p = sub.add_parser("synth", help="write a synthetic scene in the recording file formats")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-events", type=int, default=15000)
    p.add_argument("--noise-frac", type=float, default=0.05)
    p.add_argument("--speed", type=float, default=3.0, help="linear speed, m/s")
    p.add_argument("--spin", type=float, default=2.0, help="angular speed, rad/s")
    p.add_argument("--duration", type=float, default=0.022)

    p = sub.add_parser("ablate", help="metrics table over cost / sync / noise / window variants")
    _add_input_flags(p, required=False)
    p.add_argument("--synth-seed", type=int, help="use a generated scene instead of input files")
    p.add_argument("--out", required=True, help="metrics CSV path")
    _add_algorithm_flags(p)
    p.add_argument("--costs", default="iou,intersection,time")
    p.add_argument("--sync-modes", default="sync,nosync")
    p.add_argument("--noise-pcts", default="0")
    p.add_argument("--windows", default=None, help="comma-separated window sides (default: --window)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="throughput of the numba and numpy kernel paths")
    p.add_argument("--sizes", default="15000,30000")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--backends", default=None, help="comma-separated subset of numba,numpy")
    p.add_argument("--json", action="store_true")
    return parser


def _csv(text, conv=str):
    return [conv(s.strip()) for s in text.split(",") if s.strip()]


def cmd_run(args) -> int:
    config = RunConfig(
        events_left=args.events_left,
        events_right=args.events_right,
        calib=args.calib,
        velocity=args.velocity,
        out=args.out,
        gt=args.gt,
        min_disparity=args.min_disparity,
        max_disparity=args.max_disparity,
        window=args.window,
        eps_c=args.eps_c,
        eps_n=args.eps_n,
        num_events=args.num_events,
        cost=args.cost,
        sync=not args.no_sync,
        noise_pct=args.noise_pct,
        seed=args.seed,
        dump_volumes=args.dump_volumes,
        dump_costs=args.dump_costs,
    )
    if args.print_config:
        cfg = config.disparity_config()
        print(json.dumps({**cfg.__dict__, "cost": config.cost, "sync": config.sync}, sort_keys=True))
        return 0
    summary = run(config)
    rates = summary["events_per_second"]
    print(f"{summary['batches']} batches written to {args.out} [{backend_name()}]")
    for i, r in enumerate(rates):
        print(f"  batch {i}: {r:,.0f} events/s")
    for row in summary.get("metrics", []):
        print(
            f"  {row['variant']}: mean disp err {row['mean_disp_err']:.3f} px, "
            f"depth err {row['mean_depth_err']:.3f} m, within 1 px {row['pct_within_1']:.1f}%"
        )
    return 0


def cmd_synth(args) -> int:
    from .synth import MVSEC_LIKE_RIG, random_scene, scene_recording

    rig = MVSEC_LIKE_RIG
    spec = random_scene(
        args.seed,
        rig,
        num_events=args.num_events,
        noise_frac=args.noise_frac,
        duration=args.duration,
        speed=args.speed,
        spin=args.spin,
    )
    rec = scene_recording(spec, rig, args.num_events)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = f"synthetic scene seed={args.seed} disparities={spec.meta['disparities']}"
    evio.write_events(out / "events_left.txt", rec.left, header)
    evio.write_events(out / "events_right.txt", rec.right, header)
    evio.write_calibration(out / "calib.txt", rig)
    evio.write_velocity(out / "velocity.txt", rec.velocity)
    evio.write_ground_truth(out / "gt.pgm", rec.gt)
    print(f"wrote {len(rec.left)} left / {len(rec.right)} right events to {out}")
    return 0


def cmd_ablate(args) -> int:
    from .evaluation import ablation_runner, write_metrics_csv

    if args.synth_seed is not None:
        from .synth import MVSEC_LIKE_RIG, random_scene, scene_recording

        rec = scene_recording(random_scene(args.synth_seed, MVSEC_LIKE_RIG, num_events=args.num_events), MVSEC_LIKE_RIG, args.num_events)
    else:
        missing = [n for n in ("events_left", "events_right", "calib", "velocity", "gt") if not getattr(args, n)]
        if missing:
            raise SystemExit(f"ablate needs --synth-seed or input files; missing {missing}")
        rec = Recording.load(args.events_left, args.events_right, args.calib, args.velocity, args.gt)
    cfg = DisparityConfig(args.min_disparity, args.max_disparity, args.window, args.eps_c, args.eps_n, args.num_events)
    modes = {"sync": True, "nosync": False}
    variants = [(c, modes[m]) for c in _csv(args.costs) for m in _csv(args.sync_modes)]
    windows = _csv(args.windows, int) if args.windows else [args.window]
    rows = ablation_runner(rec, variants, _csv(args.noise_pcts, float), windows, cfg, seed=args.seed)
    write_metrics_csv(args.out, rows)
    for row in rows:
        print(
            f"{row['variant']:<7} noise={row['noise_pct']:<5g} window={row['window']:<3d} "
            f"err={row['mean_disp_err']:.3f} px  within1={row['pct_within_1']:.1f}%"
        )
    return 0


def cmd_bench(args) -> int:
    from .bench import format_rows, run_bench

    backends = _csv(args.backends) if args.backends else None
    rows = run_bench(_csv(args.sizes, int), args.repeat, backends)
    print(json.dumps(rows, indent=2) if args.json else format_rows(rows))
    return 0


COMMANDS = {"run": cmd_run, "synth": cmd_synth, "ablate": cmd_ablate, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
