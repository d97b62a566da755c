"""Command line entry point.

Exit codes: 0 success, 2 invalid config, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import analysis
from .harness import (
    ConfigError,
    emit_plot_data,
    load_config,
    preset,
    presets,
    run,
    write_outputs,
)
from .reward_model import biased_distance, compute_regions

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


def _config(ref: str):
    # a path wins over a preset of the same name
    if not Path(ref).exists() and ref in presets():
        return preset(ref)
    return load_config(ref)


def _run_and_write(cfg, args):
    result = run(cfg, workers=args.workers)
    out = write_outputs(result, args.out)
    for label, s in result.summaries.items():
        print(f"{label}: mean cumulative regret at T={cfg.horizon}: "
              f"{s.mean_cum[-1]:.4f} +/- {s.se_cum[-1]:.4f}")
    print(f"wrote {out}")


def cmd_run(args):
    cfg = load_config(args.config)
    if args.thin:
        cfg.thin = True
    _run_and_write(cfg, args)


def cmd_preset(args):
    if args.name == "list":
        for name in presets():
            print(name)
        return
    cfg = preset(args.name, horizon=args.horizon, replications=args.reps, base_seed=args.seed)
    if args.thin:
        cfg.thin = True
    if args.dump:
        sys.stdout.write(cfg.to_json())
        return
    _run_and_write(cfg, args)


def cmd_bounds(args):
    cfg = _config(args.config)
    rep = analysis.bound_report(cfg.instance, args.horizons, C1=args.C1, C2=args.C2, grid_step=cfg.grid_step)
    series = {"thm1-bound": (rep.horizons, rep.thm1), "thm2-shape": (rep.horizons, rep.thm2)}
    if rep.thm4 is not None:
        series["thm4-lower"] = (rep.horizons, rep.thm4)
    text = emit_plot_data({}, bounds=series)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    for key, value in rep.constants.items():
        print(f"# {key} = {value}", file=sys.stderr)


def cmd_regions(args):
    cfg = _config(args.config)
    step = args.grid_step or cfg.grid_step
    for m, (g, theta) in enumerate(zip(cfg.instance.groups, cfg.instance.theta_true)):
        geo = compute_regions(g, step)
        print(f"group {m} (theta={theta}):")
        for k, ivs in enumerate(geo.regions):
            spans = ", ".join(f"[{lo:.6f}, {hi:.6f}]" for lo, hi in ivs) or "empty"
            print(f"  arm {k}: {spans}")
        delta = biased_distance(geo, theta)
        print(f"  biased distance: {'inf' if math.isinf(delta) else f'{delta:.6f}'}")


def cmd_validate(args):
    cfg = _config(args.config)
    print(f"{cfg.name}: OK ({cfg.instance.n_groups} groups, {cfg.instance.n_arms} arms, "
          f"{len(cfg.policies)} policies)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="regional-bandits", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: config or $REGIONAL_BANDITS_OUTPUT_DIR)")
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--thin", action="store_true", help="keep every 10th trace row after t=1000")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("preset", help="run a named preset ('list' to show names)")
    s.add_argument("name")
    s.add_argument("--out")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--horizon", type=int, default=None)
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--thin", action="store_true")
    s.add_argument("--dump", action="store_true", help="print the config instead of running it")
    s.set_defaults(func=cmd_preset)

    b = sub.add_parser("bounds", help="evaluate the regret bounds")
    b.add_argument("config")
    b.add_argument("--horizons", type=int, nargs="+", default=[100, 1000, 10000])
    b.add_argument("--C1", type=float, default=1.0)
    b.add_argument("--C2", type=float, default=1.0)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    g = sub.add_parser("regions", help="print optimal regions and biased distances")
    g.add_argument("config")
    g.add_argument("--grid-step", type=float, default=None)
    g.set_defaults(func=cmd_regions)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK

