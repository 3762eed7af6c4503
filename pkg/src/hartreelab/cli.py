"""Command-line interface for the scan and verification commands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    ExperimentConfig,
    cmd_convergence_scan,
    cmd_entropy_scan,
    cmd_hartree_infidelity_scan,
    cmd_limit_trajectory,
    load_config_file,
    write_rate_function_profile,
)
from .verify import run_verification

_SCAN_COMMANDS = {
    "entropy-scan": cmd_entropy_scan,
    "hartree-scan": cmd_hartree_infidelity_scan,
    "convergence-scan": cmd_convergence_scan,
    "limit-trajectory": cmd_limit_trajectory,
}

def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--p0", type=float, help="initial population of |0>")
    parser.add_argument("--t-min", dest="t_min", type=float)
    parser.add_argument("--t-max", dest="t_max", type=float)
    parser.add_argument("--t-steps", dest="t_steps", type=int)
    parser.add_argument("--n-min", dest="n_min", type=int)
    parser.add_argument("--n-max", dest="n_max", type=int)
    parser.add_argument("--n-points", dest="n_points", type=int)
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--tail-fraction", dest="tail_fraction", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hartreelab",
        description=(
            "Exact symmetric-subspace dynamics of collectively interacting "
            "qubits, mean-field references, and large-N scaling scans."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    specs = {
        "entropy-scan": "linear entropy over the (N, t) grid with tail fits",
        "hartree-scan": "infidelity against the mean-field solution",
        "convergence-scan": "infidelity against the infinite-N limit",
        "limit-trajectory": "limit dynamics versus the mean-field closed form",
        "verify": "run the cross-implementation oracle suite",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        _add_common_flags(p)
        if name == "entropy-scan":
            p.add_argument(
                "--rate-function-out",
                dest="rate_function_out",
                type=Path,
                help="also write rate-function profiles (p0, t, x, f) to this CSV",
            )
        if name == "verify":
            p.add_argument(
                "--max-n",
                dest="max_n",
                type=int,
                default=10,
                help="largest particle number for full-space comparisons (<= 12)",
            )
    return parser


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config is not None:
        values.update(load_config_file(args.config))
    overrides = {
        "p0": args.p0,
        "t_min": args.t_min,
        "t_max": args.t_max,
        "t_steps": args.t_steps,
        "n_min": args.n_min,
        "n_max": args.n_max,
        "n_points": args.n_points,
        "output_dir": args.out,
        "seed": args.seed,
        "tail_fraction": args.tail_fraction,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            seed = args.seed if args.seed is not None else 0
            report = run_verification(seed=seed, max_n=args.max_n)
            print(report.render())
            return 0 if report.passed else 2

        config = _build_config(args)
        manifest = _SCAN_COMMANDS[args.command](config)
        if getattr(args, "rate_function_out", None) is not None:
            rows = write_rate_function_profile(config, args.rate_function_out)
            manifest.files[str(args.rate_function_out)] = rows
        manifest.write(config.output_dir / "manifest.json")
        for name, rows in manifest.files.items():
            print(f"wrote {name} ({rows} rows)")
        print(f"wrote manifest.json ({manifest.wall_clock_s:.2f} s)")
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"filesystem error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - map any runtime failure to exit 3
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
