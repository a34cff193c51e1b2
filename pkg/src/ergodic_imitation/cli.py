"""Command-line entry point.

Subcommands:
    demo-gen  generate scripted expert demonstrations for a layout
    run       run a single episode (optionally perturbed), dump trace/SVG
    sweep     success statistics over a grid of perturbation scales
    check     run the built-in invariant/oracle suite

Exit codes: 0 on success, 1 when checks/invariants fail, 2 on bad
configuration or input files.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .geometry import load_dataset, save_trajectory
from .harness import (
    export_planner_rows,
    export_sweep,
    export_trace,
    planner_sidecar_path,
    run_episode,
    run_sweep,
)
from .maze import load_layout, perturb_gates, scripted_expert
from .render import render_svg
from .selfcheck import run_checks


def _cmd_demo_gen(args) -> int:
    layout = load_layout(args.layout)
    demo = scripted_expert(layout, speed=args.speed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "expert.csv")
    save_trajectory(demo, path)
    print(f"wrote {path} ({len(demo)} states, speed {args.speed})")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if cfg.layout_path is None or cfg.dataset_path is None:
        raise ConfigError(f"{args.config}: 'layout' and 'dataset' are required to run")
    layout = load_layout(cfg.layout_path)
    dataset = load_dataset(cfg.dataset_path)
    perturbation = None
    if args.sigma is not None:
        layout, perturbation = perturb_gates(layout, args.sigma, seed=(cfg.seed, 9001))
    trace = run_episode(cfg, layout, dataset, seed=cfg.seed, record_particles=args.svg is not None)
    outcome = "success" if trace.success else "failure"
    print(f"{outcome} in {trace.steps_used} steps (seed {cfg.seed}"
          + (f", sigma {args.sigma}" if args.sigma is not None else "") + ")")
    if perturbation is not None:
        print("gate offsets: " + ", ".join(f"{o:+.4f}" for o in perturbation.offsets))
    if args.trace:
        export_trace(trace, args.trace)
        export_planner_rows(trace, planner_sidecar_path(args.trace))
        print(f"wrote {args.trace}")
    if args.svg:
        demo = dataset.demos[0]
        snaps = trace.particle_snapshots[-1:] if trace.particle_snapshots else None
        render_svg(trace, layout, args.svg, demo=demo, particles=snaps)
        print(f"wrote {args.svg}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    rows = run_sweep(cfg, jobs=args.jobs)
    for r in rows:
        print(
            f"sigma={r.sigma:g} trials={r.trials} successes={r.successes} "
            f"rate={r.success_rate:.2f} mean_steps={r.mean_steps_success:.1f}"
        )
    if args.out:
        export_sweep(rows, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_check(args) -> int:
    return 0 if run_checks(verbose=True) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ergodic-imitation",
        description="Demonstration tracking with stagnation-triggered ergodic exploration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-gen", help="generate a scripted expert demonstration")
    p.add_argument("--layout", required=True, help="layout YAML file")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--speed", type=float, default=0.01, help="arc length per timestep")
    p.set_defaults(func=_cmd_demo_gen)

    p = sub.add_parser("run", help="run a single episode")
    p.add_argument("--config", required=True, help="run config YAML file")
    p.add_argument("--sigma", type=float, default=None, help="gate perturbation std")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--trace", default=None, help="write the per-step trace CSV here")
    p.add_argument("--svg", default=None, help="write an SVG rendering here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="perturbation sweep")
    p.add_argument("--config", required=True, help="run config YAML file")
    p.add_argument("--out", default=None, help="write the results CSV here")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check", help="run built-in invariant/oracle checks")
    p.set_defaults(func=_cmd_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
