"""``experiment`` command line entry point."""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .experiment import (ALL_METHODS, CSV_COLUMNS, SWEEP_METHODS, ConfigError, load_config,
                         rows_to_series, run_directions, run_paths_sweep, run_pattern, run_sweep,
                         to_csv)
from .svg import line_plot

EXIT_OK, EXIT_USAGE, EXIT_FAILURE, EXIT_ORACLE = 0, 1, 2, 3

ALIASES = {"fig1": "pattern", "fig2": "sweep", "fig3": "directions", "fig4": "paths"}

EPILOG = """\
CSV columns:
  pattern     {pattern}
  sweep       {sweep}
  directions  {directions}
  paths       {paths}
Rates are normalised by the full-array beam at the LOS direction; NaN
means no trial was feasible. Lines starting with '#' carry the config
hash, seed and version.

exit codes: 0 ok, 1 usage, 2 infeasible or numerical failure, 3 oracle failure
methods: {methods}
""".format(**{k: ",".join(v) for k, v in CSV_COLUMNS.items()}, methods=", ".join(ALL_METHODS))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file overriding the built-in defaults")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--trials", type=int)
    common.add_argument("--svg", action="store_true", help="also write an SVG plot")
    common.add_argument("--out", help="output directory (CSV goes to stdout if omitted)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = _Parser(prog="experiment", description="Multibeam beamforming Monte Carlo study.",
                epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        aliases = [a for a, t in ALIASES.items() if t == name]
        return sub.add_parser(name, aliases=aliases, parents=[common], help=help_,
                              epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)

    sp = add("pattern", "per-angle gain of each method on one channel draw")
    sp.add_argument("--methods", type=_csv_list(str))
    sp.add_argument("--direction", type=float, help="scan direction in degrees")
    sp.add_argument("--trial", type=int, default=0, help="channel draw index")

    sp = add("sweep", "metrics versus a constraint bound")
    sp.add_argument("--param", choices=sorted(SWEEP_METHODS), default="Cs")
    sp.add_argument("--values", type=_csv_list(float))
    sp.add_argument("--methods", type=_csv_list(str))

    sp = add("directions", "metrics at each scan direction")
    sp.add_argument("--methods", type=_csv_list(str))

    sp = add("paths", "metrics versus the number of channel paths")
    sp.add_argument("--L", dest="L_values", type=_csv_list(int))
    sp.add_argument("--methods", type=_csv_list(str))

    sp = add("oracle", "oracle-dominance and equivalence suite")
    sp.add_argument("--resolution", type=int, default=200_000)
    sp.add_argument("--samples", type=int, default=20_000)
    sp.add_argument("--global-instances", type=int, default=5)
    return p


def _emit(args, kind, text, svg=None):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{kind}.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        if svg is not None:
            with open(os.path.join(args.out, f"{kind}.svg"), "w", encoding="utf-8") as fh:
                fh.write(svg)
    else:
        sys.stdout.write(text)
        if svg is not None:
            with open(f"{kind}.svg", "w", encoding="utf-8") as fh:
                fh.write(svg)


def _check_methods(methods):
    bad = [m for m in methods or () if m not in ALL_METHODS]
    if bad:
        raise ConfigError(f"unknown method(s) {bad}; valid: {', '.join(ALL_METHODS)}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = ALIASES.get(args.command, args.command)
    overrides = {k: v for k, v in (("seed", args.seed), ("trials", args.trials)) if v is not None}
    try:
        cfg = load_config(args.config, overrides)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if command == "oracle":
            return _oracle(args, cfg)
        _check_methods(getattr(args, "methods", None))
        if command == "pattern":
            summary, results = run_pattern(cfg, args.methods, args.direction, args.trial)
            failed = [m for m, r in results.items() if not r.feasible]
            svg = line_plot(rows_to_series(summary.rows), "Beam pattern", "angle (deg)",
                            "gain (dB)") if args.svg else None
            _emit(args, "pattern", to_csv("pattern", summary.rows, cfg), svg)
            if failed:
                print(f"no feasible solution for: {', '.join(failed)}", file=sys.stderr)
            return EXIT_FAILURE if failed or summary.numerical_failures else EXIT_OK
        if command == "sweep":
            summary = run_sweep(cfg, args.param, args.values, args.methods, jobs=args.jobs)
            xlabel = {"Cs": "C_s", "Cp": "C_p"}[args.param]
        elif command == "directions":
            summary = run_directions(cfg, args.methods, jobs=args.jobs)
            xlabel = "scan direction (deg)"
        else:
            summary = run_paths_sweep(cfg, args.L_values, args.methods, jobs=args.jobs)
            xlabel = "number of paths L"
        svg = line_plot(rows_to_series(summary.rows), command, xlabel,
                        "normalised rx power", markers=True) if args.svg else None
        _emit(args, command, to_csv(command, summary.rows, cfg), svg)
        if summary.numerical_failures:
            print(f"{summary.numerical_failures} solve(s) hit a numerical failure",
                  file=sys.stderr)
            return EXIT_FAILURE
        return EXIT_OK
    except (ConfigError, FileNotFoundError) as exc:
        print(f"experiment: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _oracle(args, cfg) -> int:
    from .suite import run_oracle_suite

    seeds = args.trials if args.trials is not None else 50
    report = run_oracle_suite(seeds=seeds, seed=cfg.seed, resolution=args.resolution,
                              samples=args.samples, global_instances=args.global_instances)
    text = report.text()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "oracle.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
