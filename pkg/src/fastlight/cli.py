"""Command-line interface.

Subcommands
    simulate          one channel, one seed: gate sweep + visibility trace
    compare           both channels at one seed + detection report
    ensemble          seeded ensemble with aggregate statistics and artifacts
    sweep             one ensemble per value of a swept parameter
    calibrate-medium  solve gain-doublet parameters for a target group index
    emit              project run artifacts into plot-ready figure files

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import figures, runner
from .analysis import compare as compare_traces
from .analysis import integrated_snr, write_trace_csv
from .config import load_config
from .detector import save_stack
from .errors import ConfigError, SimulationError
from .medium import dispersion_report
from .medium import calibrate_doublet


def _add_common(parser: argparse.ArgumentParser, seeds: bool = False) -> None:
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument("--seed", type=int, default=0, help="seed index (default 0)")
    if seeds:
        parser.add_argument(
            "--seeds", type=int, default=None, help="override the ensemble seed count"
        )
    parser.add_argument("--out", default=None, help="output directory for artifacts")
    parser.add_argument(
        "--save-frames", action="store_true", help="also write raw frame stacks (NPZ)"
    )
    parser.add_argument(
        "--quiet", action="store_true", help="suppress informational output"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastlight",
        description="Fast-light pulse detection simulator and analysis tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one channel at one seed")
    _add_common(p)
    p.add_argument(
        "--channel",
        choices=(runner.REFERENCE, runner.FAST),
        default=runner.FAST,
        help="which channel to simulate (default fast)",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run both channels at one seed")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ensemble", help="run the full seeded ensemble")
    _add_common(p, seeds=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("sweep", help="ensemble per value of one parameter")
    _add_common(p, seeds=True)
    p.add_argument(
        "--parameter",
        required=True,
        choices=("efficiency", "gain", "advancement"),
        help="which knob to sweep",
    )
    p.add_argument(
        "--values",
        required=True,
        help="comma-separated parameter values, e.g. 0.1,0.3,1.0",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "calibrate-medium", help="solve doublet lines for a target group index"
    )
    p.add_argument("--group-index", type=float, default=-2400.0)
    p.add_argument("--length", type=float, default=0.017, help="medium length, m")
    p.add_argument("--gain-tol", type=float, default=0.01)
    p.add_argument("--flat-band", type=float, default=1.0e4, help="Hz")
    p.add_argument("--max-line-gain", type=float, default=10.0)
    p.add_argument("--out", default=None)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("emit", help="write plot-ready files for one figure")
    p.add_argument(
        "--figure", required=True, choices=figures.FIGURE_IDS, help="figure id"
    )
    p.add_argument("--from", dest="from_dir", required=True, help="run artifacts dir")
    p.add_argument("--out", default=None, help="destination (default: --from dir)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_emit)
    return parser


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seeds", None) is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        cfg = replace(cfg, ensemble=replace(cfg.ensemble, n_seeds=args.seeds))
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    stack, trace = runner.run_channel(cfg, args.channel, args.seed)
    n_valid = int(trace.valid.sum())
    _say(args, f"channel={args.channel} seed={args.seed} frames={len(stack)} "
               f"valid_snr_frames={n_valid}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(
            out / f"trace_{args.channel}_seed{args.seed}.csv",
            trace,
            integrated_snr(trace),
            {"config_hash": cfg.config_hash, "channel": args.channel,
             "seed": args.seed},
        )
        if args.save_frames:
            save_stack(stack, out / f"frames_{args.channel}_seed{args.seed}.npz")
        _say(args, f"wrote artifacts to {out}")
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    stacks, traces = {}, {}
    for ch in (runner.REFERENCE, runner.FAST):
        stacks[ch], traces[ch] = runner.run_channel(cfg, ch, args.seed)
    report = compare_traces(
        traces[runner.REFERENCE],
        traces[runner.FAST],
        pulse_fwhm=cfg.pulse.fwhm,
        threshold=cfg.analysis.snr_threshold,
        persistence=cfg.analysis.persistence,
    )
    _say(args, f"t_detect_reference_s={report.t_detect_reference!r}")
    _say(args, f"t_detect_fast_s={report.t_detect_fast!r}")
    _say(args, f"advancement_s={report.advancement!r}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for ch in (runner.REFERENCE, runner.FAST):
            write_trace_csv(
                out / f"trace_{ch}_seed{args.seed}.csv",
                traces[ch],
                integrated_snr(traces[ch]),
                {"config_hash": cfg.config_hash, "channel": ch, "seed": args.seed},
            )
            if args.save_frames:
                save_stack(stacks[ch], out / f"frames_{ch}_seed{args.seed}.npz")
        with open(out / "report.txt", "w") as fh:
            fh.write(f"config_hash={cfg.config_hash}\n")
            fh.write(f"seed={args.seed}\n")
            fh.write(f"t_detect_reference_s={report.t_detect_reference!r}\n")
            fh.write(f"t_detect_fast_s={report.t_detect_fast!r}\n")
            fh.write(f"advancement_s={report.advancement!r}\n")
            fh.write(f"relative_advancement={report.relative_advancement!r}\n")
        _say(args, f"wrote artifacts to {out}")
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load(args)
    progress = None
    if not args.quiet:
        def progress(done, total):
            print(f"\rseed {done}/{total}", end="", file=sys.stderr, flush=True)
    result = runner.run_ensemble(
        cfg, out_dir=args.out, save_frames=args.save_frames, progress=progress
    )
    if progress is not None:
        print(file=sys.stderr)
    _say(args, f"n_seeds={result.n_seeds} n_detected_both={result.n_detected}")
    _say(args, f"mean_advancement_s={result.mean_advancement!r}")
    _say(args, f"stderr_advancement_s={result.stderr_advancement!r}")
    w = result.window_fast_exceeds_reference
    _say(args, f"window_fast_exceeds_reference_s={w!r}")
    if args.out is not None:
        _say(args, f"wrote artifacts to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list: {exc}") from exc
    if not values:
        raise ConfigError("--values must list at least one number")
    rows = runner.sweep_parameter(cfg, args.parameter, values)
    lines = ["value,mean_advancement_s,std_advancement_s,n_detected,window_lo_s,window_hi_s"]
    for row in rows:
        w = row["window"]
        lo = repr(w[0]) if w else "none"
        hi = repr(w[1]) if w else "none"
        lines.append(
            f"{row['value']!r},{row['mean_advancement']!r},"
            f"{row['std_advancement']!r},{row['n_detected']},{lo},{hi}"
        )
    table = "\n".join(lines)
    _say(args, table)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"sweep_{args.parameter}.csv", "w") as fh:
            fh.write(f"# config_hash={cfg.config_hash}\n")
            fh.write(f"# parameter={args.parameter}\n")
            fh.write(table + "\n")
        _say(args, f"wrote artifacts to {out}")
    return 0


def cmd_calibrate(args) -> int:
    medium = calibrate_doublet(
        target_n_g=args.group_index,
        length_L=args.length,
        carrier_gain_tol=args.gain_tol,
        flat_band=args.flat_band,
        max_line_power_gain=args.max_line_gain,
    )
    report = dispersion_report(medium)
    lines_toml = []
    for line in medium.lines:
        lines_toml.append(
            "[[medium.lines]]\n"
            f"center_detuning = {line.center_detuning!r}\n"
            f"half_width = {line.half_width!r}\n"
            f"strength = {line.strength!r}\n"
        )
    snippet = (
        "[medium]\n"
        'mode = "physical"\n'
        f"length = {medium.length_L!r}\n\n" + "\n".join(lines_toml)
    )
    if not args.quiet:
        print(f"# n_g = {report.n_g!r}")
        print(f"# group_delay_s = {report.delta_T!r}")
        print(f"# carrier_power_gain = {report.gain_at_carrier!r}")
        print(f"# max_power_gain_in_band = {report.max_gain_in_band!r}")
        print(snippet, end="")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "calibrated_medium.cfg", "w") as fh:
            fh.write(snippet)
        if not args.quiet:
            print(f"# wrote {out / 'calibrated_medium.cfg'}")
    return 0


def cmd_emit(args) -> int:
    written = figures.emit_figure(args.from_dir, args.figure, args.out)
    if not args.quiet:
        for path in written:
            print(path)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
