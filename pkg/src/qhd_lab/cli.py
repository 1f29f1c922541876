"""Command-line entry point: ``qhd-lab run | verify | plot | list-objectives``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from qhd_lab import objectives

log = logging.getLogger("qhd_lab")


def cmd_run(args) -> int:
    from qhd_lab.config import parse_config
    from qhd_lab.runner import execute

    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = args.out or cfg.output_dir or str(Path("runs") / Path(cfg.source).stem)
    manifest = execute(cfg, out, write_density=not args.no_density)
    print(f"{manifest['name']}: {manifest['rows']} rows written to {out} ({manifest['wall_time_s']:.1f} s)")
    return 0


def cmd_verify(args) -> int:
    from qhd_lab import verify

    results = verify.SUITES[args.suite]()
    print(verify.format_table(results))
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAILED: {r.name}", file=sys.stderr)
    return 1 if failed else 0


def cmd_plot(args) -> int:
    from qhd_lab.plotting import plot_series

    plot_series(args.series, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_list_objectives(args) -> int:
    for name in objectives.NAMES:
        obj = objectives.get(name)
        box = " x ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(obj.box.lo, obj.box.hi))
        mins = "; ".join("(" + ", ".join(f"{c:.10g}" for c in m) + ")" for m in obj.minimizers)
        print(f"{name:<16} box {box:<22} f_min {obj.f_min:<22.15g} minimizers {mins}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qhd-lab", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config (file path or shipped preset name)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (default: config output_dir or runs/<config name>)")
    p.add_argument("--seed", type=int, help="override the config's master seed")
    p.add_argument("--no-density", action="store_true", help="skip final_density.csv for quantum runs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=("commutators", "lyapunov", "splitting", "gradients"))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="plot series.csv files to an SVG")
    p.add_argument("--out", required=True)
    p.add_argument("series", nargs="*")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("list-objectives", help="list built-in objectives")
    p.set_defaults(func=cmd_list_objectives)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130
    except Exception as exc:  # every module error becomes a diagnostic and a nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
