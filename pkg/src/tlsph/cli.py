"""Command-line interface.

Subcommands: run (simulate a preset or config file into a run directory),
convergence (spacing ladder), crack (angle/components of a finished run),
probe (time series to stdout), report (render figures into the run
directory). Usage errors exit with status 2, runtime failures with 1.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import config as cfg
from .core import NumericalParams, OutOfRange
from .scenes import PRESETS
from .snapshots import (IoError, NoCracks, RunWriter, read_crack_events,
                        read_manifest)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlsph",
        description="2D total-Lagrangian SPH impact and fracture benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a preset scene or config file")
    run.add_argument("scene", help="preset name or config file path")
    run.add_argument("--dp", type=float, help="particle spacing [mm]")
    run.add_argument("--v0", type=float,
                     help="impact velocity [m/s] (presets only)")
    run.add_argument("--t-end", type=float, help="end time [s]")
    run.add_argument("--kp", type=float, help="contact force scale K_p")
    run.add_argument("--out", default="out", help="output directory root")
    run.add_argument("--snapshot-every", type=int, default=0,
                     help="steps between snapshots (0: final only)")
    run.add_argument("--seedless-deterministic", action="store_true",
                     help="assert the run uses no random source (always true)")

    conv = sub.add_parser("convergence", help="spacing-ladder study")
    conv.add_argument("scene", help="preset name")
    conv.add_argument("--dp", required=True,
                      help="comma-separated spacings [mm]")
    conv.add_argument("--v0", type=float, help="impact velocity [m/s]")
    conv.add_argument("--t-end", type=float, dest="conv_t_end",
                      help="override simulated time per run [s]")
    conv.add_argument("--out", help="write the table here instead of stdout")

    crack = sub.add_parser("crack", help="crack path summary of a run")
    crack.add_argument("run_dir")

    probe = sub.add_parser("probe", help="print a probe time series")
    probe.add_argument("run_dir")
    probe.add_argument("--name", default=None, help="probe name")

    report = sub.add_parser("report", help="render figures for a run")
    report.add_argument("run_dir")
    return parser


def _usage_error(parser: argparse.ArgumentParser, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    parser.print_usage(sys.stderr)
    return 2


def _load_spec(args, parser) -> "cfg.SceneSpec | int":
    is_preset = args.scene in PRESETS and not os.path.exists(args.scene)
    if is_preset:
        kwargs = {}
        if args.dp is not None:
            kwargs["dp"] = args.dp * 1e-3
        if args.v0 is not None:
            kwargs["v0"] = args.v0
        spec = PRESETS[args.scene](**kwargs)
    else:
        if args.v0 is not None:
            return _usage_error(parser, "--v0 applies to preset scenes only")
        try:
            spec = cfg.parse_config(args.scene)
        except cfg.ParseError as exc:
            return _usage_error(parser, str(exc))
        if args.dp is not None:
            spec = replace(spec, params=NumericalParams(dp=args.dp * 1e-3))
    if args.t_end is not None:
        spec = replace(spec, t_end=args.t_end)
    if args.kp is not None:
        spec = replace(spec, contact=replace(spec.contact, K_p=args.kp))
    return spec


def _cmd_run(args, parser) -> int:
    from .scenes import make_simulation

    spec = _load_spec(args, parser)
    if isinstance(spec, int):
        return spec
    out_dir = os.path.join(args.out, spec.name)
    writer = RunWriter(spec, out_dir)
    sim, probes = make_simulation(spec)
    every = args.snapshot_every

    def on_snapshot(s):
        writer.probe_sample(s, probes)
        if every:
            writer.snapshot(s)

    sim.run(spec.t_end, snapshot_every=every or 200, on_snapshot=on_snapshot)
    if not every:
        writer.snapshot(sim)
    writer.finish(sim)
    print(f"run complete: {sim.step_count} steps, t = {sim.t:.6e} s, "
          f"{sim.broken_link_count()} broken links -> {out_dir}")
    return 0


def _cmd_convergence(args, parser) -> int:
    from .study import format_table, run_convergence

    if args.scene not in PRESETS:
        return _usage_error(parser, f"unknown preset {args.scene!r}")
    try:
        dp_list = [float(tok) * 1e-3 for tok in args.dp.split(",") if tok]
    except ValueError:
        return _usage_error(parser, f"bad --dp list {args.dp!r}")
    if not dp_list:
        return _usage_error(parser, "--dp list is empty")
    kwargs = {"v0": args.v0} if args.v0 is not None else {}
    if args.conv_t_end is not None:
        kwargs["t_end"] = args.conv_t_end
    rows = run_convergence(PRESETS[args.scene], dp_list, **kwargs)
    table = format_table(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return 1 if all(r.failed for r in rows) else 0


def _cmd_crack(args, parser) -> int:
    from .crack import extract_crack_path, fit_angle

    log = os.path.join(args.run_dir, "crack_events.csv")
    events = read_crack_events(log)
    manifest = read_manifest(args.run_dir)
    axis = (1.0, 0.0)
    config_path = os.path.join(args.run_dir, "config.toml")
    if os.path.exists(config_path):
        axis = cfg.parse_config(config_path).crack_axis
    paths = extract_crack_path(events)
    angle = fit_angle(paths[0].midpoints, axis)
    print(f"scene: {manifest.get('scene', '?')}")
    print(f"broken links: {len(events)}")
    print(f"components: {len(paths)} (dominant: {paths[0].n} links)")
    print(f"angle vs scene axis: {angle:.2f} deg")
    return 0


def _cmd_probe(args, parser) -> int:
    path = os.path.join(args.run_dir, "probes.csv")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if args.name is None:
            cols = list(range(len(header)))
        else:
            cols = [0] + [c for c, h in enumerate(header)
                          if h.startswith(args.name + "_")]
            if len(cols) == 1:
                return _usage_error(parser, f"no probe named {args.name!r}")
        print(",".join(header[c] for c in cols))
        for line in fh:
            parts = line.strip().split(",")
            print(",".join(parts[c] for c in cols))
    return 0


def _cmd_report(args, parser) -> int:
    from .viz import render_report

    produced = render_report(args.run_dir)
    for path in produced:
        print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "convergence": _cmd_convergence,
                "crack": _cmd_crack, "probe": _cmd_probe,
                "report": _cmd_report}
    try:
        return handlers[args.command](args, parser)
    except (cfg.ParseError, cfg.ValidationError, OutOfRange) as exc:
        return _usage_error(parser, str(exc))
    except (IoError, NoCracks, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
