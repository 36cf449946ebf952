"""Command-line interface.

Verbs: estimate | eval | check-corr | mix-plan | warp | viz.  Exit codes:
0 success, 1 verification failure, 2 usage or input error.  The environment
variable ``MSRAFT_THREADS`` caps cross-pair parallelism (0 or unset = auto);
within a pair execution is always sequential.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import correlation, flowio, metrics, mixing, pipeline, viz
from .correlation import max_relative_deviation
from .errors import FormatError, InputError, NumericError

CORR_TOLERANCE = 1e-5

SCHEDULES = {
    "train": pipeline.TRAIN_SCHEDULE,
    "infer": pipeline.INFERENCE_SCHEDULE,
}


@dataclass
class RunConfig:
    """Resolved estimation options shared by the estimate command."""

    schedule: pipeline.IterationSchedule
    radius: int
    levels: int
    warm_start: bool
    inputs: list[str]
    out_dir: str
    seed: int
    viz: bool


def _threads() -> int:
    raw = os.environ.get("MSRAFT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"MSRAFT_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise InputError(f"MSRAFT_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def _resolve_schedule(args) -> pipeline.IterationSchedule:
    if args.schedule == "custom":
        if not args.iters:
            raise InputError("--schedule custom requires --iters T1,T2,T3,T4")
        parts = [p for p in args.iters.split(",") if p]
        if len(parts) != 4:
            raise InputError(f"--iters needs four comma-separated counts, got {args.iters!r}")
        return pipeline.IterationSchedule(tuple(int(p) for p in parts))
    if args.iters:
        raise InputError("--iters is only valid with --schedule custom")
    return SCHEDULES[args.schedule]


def _load_frames(paths) -> list[np.ndarray]:
    frames = [flowio.read_image(p) for p in paths]
    first = frames[0].shape
    for p, f in zip(paths, frames):
        if f.shape != first:
            raise InputError(f"frame {p} has shape {f.shape}, expected {first}")
    return frames


def cmd_estimate(args) -> int:
    cfg = RunConfig(schedule=_resolve_schedule(args), radius=args.radius,
                    levels=args.levels, warm_start=args.warm_start,
                    inputs=list(args.images), out_dir=args.out_dir,
                    seed=args.seed, viz=args.viz)
    if cfg.radius < 1 or cfg.levels < 1:
        raise InputError("--radius and --levels must be >= 1")
    frames = _load_frames(cfg.inputs)
    if len(frames) < 2:
        raise InputError("need at least two images")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    updater = pipeline.ArgmaxUpdater(cfg.radius)

    def run_pair(k: int) -> np.ndarray:
        traces = pipeline.estimate_sequence(frames[k - 1:k + 1], schedule=cfg.schedule,
                                            updater=updater, radius=cfg.radius,
                                            levels=cfg.levels, warm_start=False)
        return traces[0].final_flow

    n_pairs = len(frames) - 1
    if cfg.warm_start:
        traces = pipeline.estimate_sequence(frames, schedule=cfg.schedule, updater=updater,
                                            radius=cfg.radius, levels=cfg.levels,
                                            warm_start=True)
        finals = [t.final_flow for t in traces]
    else:
        workers = min(_threads(), n_pairs)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                finals = list(pool.map(run_pair, range(1, n_pairs + 1)))
        else:
            finals = [run_pair(k) for k in range(1, n_pairs + 1)]
    for k, flow in enumerate(finals, start=1):
        flo_path = out_dir / f"flow_{k:04d}.flo"
        flowio.write_flo(flo_path, flow)
        print(flo_path)
        if cfg.viz:
            img_path = out_dir / f"flow_{k:04d}.ppm"
            flowio.write_ppm(img_path, viz.flow_to_color(flow))
            print(img_path)
    return 0


def _load_mask(path) -> np.ndarray:
    img = flowio.read_image(path)
    return img[0] != 0


def cmd_eval(args) -> int:
    if args.improve is not None:
        old, new = args.improve
        print(metrics.format_improvement(metrics.improvement_pct(old, new)))
        return 0
    if not args.flow or not args.gt:
        raise InputError("eval needs FLOW and GT files (or --improve OLD NEW)")
    est = flowio.read_flow_file(args.flow)
    gt = flowio.read_flow_file(args.gt)
    if est.flow.shape != gt.flow.shape:
        raise InputError(
            f"flow dims {est.flow.shape[1:]} do not match ground truth {gt.flow.shape[1:]}")
    valid = gt.valid
    if args.valid:
        valid = _load_mask(args.valid)
    noc = _load_mask(args.noc) if args.noc else None
    result = metrics.compute_metrics(est.flow, gt.flow, valid=valid, noc=noc)
    print(metrics.format_metrics(result))
    return 0


def cmd_check_corr(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    worst_at = None
    for trial in range(args.trials):
        h = int(rng.integers(4, args.height + 1))
        w = int(rng.integers(4, args.width + 1))
        c = int(rng.integers(1, args.channels + 1))
        levels = min(args.levels, correlation.max_levels(h, w))
        f1 = rng.standard_normal((c, h, w))
        f2 = rng.standard_normal((c, h, w))
        flow = rng.uniform(-3.0, 3.0, size=(2, h, w))
        pyramid = correlation.build_feature_pyramid(f2, levels)
        on_demand = correlation.lookup_on_demand(f1, pyramid, flow, radius=args.radius)
        if args.inject:
            on_demand = on_demand + args.inject
        vol = correlation.build_all_pairs(f1, f2)
        oracle = correlation.lookup_precomputed(
            correlation.build_cost_pyramid(vol, levels), flow, radius=args.radius)
        dev, at = max_relative_deviation(on_demand, oracle)
        if dev > worst:
            worst = dev
            worst_at = (trial,) + at
    print(f"max relative deviation: {worst:.3e} over {args.trials} trials "
          f"(backend: {correlation.default_backend()})")
    if worst > CORR_TOLERANCE:
        trial, y, x, k = worst_at
        print(f"FAIL: deviation {worst:.3e} > {CORR_TOLERANCE} "
              f"at trial {trial}, pixel (y={y}, x={x}), feature {k}", file=sys.stderr)
        return 1
    return 0


def _parse_mix_spec(text: str) -> mixing.MixSpec:
    entries = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise InputError(f"mix entry {part!r} must be name:proportion")
        name, prop = part.rsplit(":", 1)
        try:
            entries.append((name.strip(), float(prop)))
        except ValueError:
            raise InputError(f"bad proportion in mix entry {part!r}")
    return mixing.MixSpec(tuple(entries))


def cmd_mix_plan(args) -> int:
    spec = _parse_mix_spec(args.spec) if args.spec else mixing.RVC_MIX
    draws = mixing.mix_sampler(spec, args.seed, args.n)
    for i, name in enumerate(draws, start=1):
        print(f"{i:06d} {name}")
    if draws:
        counts = {name: 0 for name in spec.ids}
        for name in draws:
            counts[name] += 1
        summary = " ".join(f"{name}={counts[name] / len(draws):.4f}" for name in spec.ids)
        print(f"# proportions: {summary}")
    return 0


def cmd_warp(args) -> int:
    from .upsample import forward_warp

    flow = flowio.read_flo(args.input)
    flowio.write_flo(args.output, forward_warp(flow))
    print(args.output)
    return 0


def cmd_viz(args) -> int:
    flow = flowio.read_flow_file(args.input).flow
    flowio.write_image(args.output, viz.flow_to_color(flow, max_norm=args.max_norm))
    print(args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msraft",
                                     description="Multi-scale recurrent optical flow tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="estimate flow for consecutive frame pairs")
    p_est.add_argument("images", nargs="+", help="two or more frames of a sequence")
    p_est.add_argument("--out-dir", default=".", help="directory for .flo outputs")
    p_est.add_argument("--schedule", choices=("infer", "train", "custom"), default="infer")
    p_est.add_argument("--iters", default="", help="T1,T2,T3,T4 for --schedule custom")
    p_est.add_argument("--radius", type=int, default=correlation.DEFAULT_RADIUS)
    p_est.add_argument("--levels", type=int, default=correlation.DEFAULT_LEVELS)
    p_est.add_argument("--warm-start", action="store_true")
    p_est.add_argument("--viz", action="store_true", help="also write color visualizations")
    p_est.add_argument("--seed", type=int, default=0, help="reserved; estimation is deterministic")
    p_est.set_defaults(func=cmd_estimate)

    p_eval = sub.add_parser("eval", help="compare a flow file against ground truth")
    p_eval.add_argument("flow", nargs="?", help=".flo or KITTI .png estimate")
    p_eval.add_argument("gt", nargs="?", help=".flo or KITTI .png ground truth")
    p_eval.add_argument("--valid", default="", help="validity mask image (nonzero = valid)")
    p_eval.add_argument("--noc", default="", help="non-occlusion mask image")
    p_eval.add_argument("--improve", nargs=2, type=float, metavar=("OLD", "NEW"),
                        help="print the relative improvement percentage instead")
    p_eval.set_defaults(func=cmd_eval)

    p_chk = sub.add_parser("check-corr", help="verify on-demand vs precomputed correlation")
    p_chk.add_argument("--height", type=int, default=16)
    p_chk.add_argument("--width", type=int, default=16)
    p_chk.add_argument("--channels", type=int, default=8)
    p_chk.add_argument("--levels", type=int, default=correlation.DEFAULT_LEVELS)
    p_chk.add_argument("--radius", type=int, default=correlation.DEFAULT_RADIUS)
    p_chk.add_argument("--trials", type=int, default=20)
    p_chk.add_argument("--seed", type=int, default=0)
    p_chk.add_argument("--inject", type=float, default=0.0, help=argparse.SUPPRESS)
    p_chk.set_defaults(func=cmd_check_corr)

    p_mix = sub.add_parser("mix-plan", help="sample a dataset mixing plan")
    p_mix.add_argument("--spec", default="", help="name:prop,... (default: RVC mix)")
    p_mix.add_argument("--n", type=int, default=1000)
    p_mix.add_argument("--seed", type=int, default=0)
    p_mix.set_defaults(func=cmd_mix_plan)

    p_warp = sub.add_parser("warp", help="forward-warp a .flo file")
    p_warp.add_argument("input")
    p_warp.add_argument("output")
    p_warp.set_defaults(func=cmd_warp)

    p_viz = sub.add_parser("viz", help="render a flow file as a color image")
    p_viz.add_argument("input")
    p_viz.add_argument("output", help=".ppm or .png")
    p_viz.add_argument("--max-norm", type=float, default=None)
    p_viz.set_defaults(func=cmd_viz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FormatError, NumericError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
