"""Command-line front end.

Thin client over the core package: parses a config, delegates to the
runner, writes files.  Exit codes: 0 success, 2 configuration error,
3 compute error.  The default output directory comes from
OPENRES_OUTPUT_DIR (falling back to ./openres_out).
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, bundled_config_text, list_experiments, load_config
from .runner import ComputeError, run_experiment

ENV_OUTPUT_DIR = "OPENRES_OUTPUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3


def _read_config(path: str) -> str:
    """Config from a file path, or a bundled experiment name."""
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    names = {name for name, _ in list_experiments()}
    if path in names:
        return bundled_config_text(path)
    raise ConfigError(f"no such config file or bundled experiment: {path!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openres",
        description=(
            "Eigenvalue trajectories, exceptional points and resonance "
            "cross sections of open-quantum-system Hamiltonians."
        ),
        epilog=(
            "Sweep CSV columns: a, branch, re_e, im_e, width(=-2*im_e), r, "
            "one_minus_r, a_norm, b_abs_1..b_abs_N, flags. "
            "Scan CSV columns: e, sigma. Contour long CSV: a, e, sigma; the "
            "matrix variant has a header row of energies and one row per a."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config (file or bundled name)")
    run.add_argument("config", help="config path or bundled experiment name")
    run.add_argument(
        "--output-dir",
        default=None,
        help=f"output directory (default: ${ENV_OUTPUT_DIR} or ./openres_out)",
    )
    run.add_argument("--threads", type=int, default=1, help="worker threads for grids")
    run.add_argument(
        "--no-refine",
        action="store_true",
        help="disable local grid refinement near close approaches",
    )

    sub.add_parser("list", help="list bundled experiments")

    val = sub.add_parser("validate", help="validate a config without running it")
    val.add_argument("config", help="config path or bundled experiment name")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list":
        for name, description in list_experiments():
            print(f"{name:12s} {description}")
        return EXIT_OK

    try:
        text = _read_config(args.config)
        cfg = load_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: mode={cfg.mode} levels={cfg.family.n} ({cfg.description})")
        return EXIT_OK

    output_dir = args.output_dir or os.environ.get(ENV_OUTPUT_DIR) or "openres_out"
    if args.threads < 1:
        print("config error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_experiment(
            cfg,
            output_dir,
            threads=args.threads,
            refine=not args.no_refine,
        )
    except ComputeError as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for name in sorted(manifest["files"]):
        print(os.path.join(output_dir, name))
    print(os.path.join(output_dir, "manifest.json"))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
