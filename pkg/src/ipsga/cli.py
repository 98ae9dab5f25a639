"""Command-line front end for the experiment runner.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 degenerate selection (total fitness collapse, message names the generation).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .distributions import DegenerateSelectionError
from .experiments import config_from_mapping, parse_config_text, run_convergence_sweep, run_experiment

__all__ = ["main", "build_parser"]


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ipsga",
        description=(
            "Run a seeded finite-population GA experiment against its exact "
            "infinite-population reference trajectory and write CSV outputs."
        ),
    )
    parser.add_argument("--preset", type=int, help="experiment preset id (1..12)")
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--o", type=int, dest="o", help="genome length (order)")
    parser.add_argument("--n", type=int, dest="n", help="population size")
    parser.add_argument("--r", type=int, dest="r", help="replicate run count")
    parser.add_argument("--generations", type=int, help="generations per run")
    parser.add_argument("--sigma", type=float, help="fitness sampling std deviation")
    parser.add_argument(
        "--fvalues", type=_float_list, help="explicit per-genome means, comma separated"
    )
    parser.add_argument(
        "--frange",
        type=_float_list,
        metavar="LO,HI",
        help="range for seeded random per-genome means",
    )
    parser.add_argument(
        "--sweep-n",
        type=_int_list,
        metavar="N1,N2,...",
        help="run a population-size convergence sweep instead of one experiment",
    )
    parser.add_argument(
        "--sweep-sigma",
        type=_float_list,
        metavar="S1,S2,...",
        help="run a fitness-noise convergence sweep instead of one experiment",
    )
    return parser


def _resolve_config(args: argparse.Namespace):
    values: dict = {}
    if args.config is not None:
        values.update(parse_config_text(args.config.read_text()))
    flag_map = {
        "preset": args.preset,
        "seed": args.seed,
        "out": args.out,
        "o": args.o,
        "n": args.n,
        "r": args.r,
        "generations": args.generations,
        "sigma": args.sigma,
        "frange": tuple(args.frange) if args.frange is not None else None,
        "fvalues": tuple(args.fvalues) if args.fvalues is not None else None,
    }
    values.update({key: value for key, value in flag_map.items() if value is not None})
    if "frange" in values and len(values["frange"]) != 2:
        raise UsageError("--frange expects exactly two values: LO,HI")
    return config_from_mapping(values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.sweep_n is not None and args.sweep_sigma is not None:
            raise UsageError("choose one of --sweep-n and --sweep-sigma")
        config = _resolve_config(args)
    except (UsageError, ValueError) as err:
        print(f"ipsga: error: {err}", file=sys.stderr)
        return 1
    try:
        if args.sweep_n is not None or args.sweep_sigma is not None:
            rows = run_convergence_sweep(
                config, population_sizes=args.sweep_n, sigmas=args.sweep_sigma
            )
            for row in rows:
                print(f"{row.parameter}={row.value}: max deviation {row.max_deviation:.6f}")
        else:
            result = run_experiment(config)
            print(f"wrote {len(result.paths)} files to {config.out}")
    except DegenerateSelectionError as err:
        print(f"ipsga: degenerate selection: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"ipsga: i/o error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
