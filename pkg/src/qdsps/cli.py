"""Command-line interface.

Subcommands: run, sweep, tpe-optimize, compare-dissipators, presets.
Exit codes: 0 success, 1 configuration error, 2 engine error, 3 acceptance
check failure (with --check).
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .config import ConfigError, parse_config
from .presets import PRESETS, preset_description, preset_names, preset_text
from .runner import (
    compare_dissipators,
    optimize_tpe_area,
    run_scenario,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ENGINE = 2
EXIT_CHECK = 3


def _load_config(path: str):
    if path in PRESETS:
        text = preset_text(path)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(text)


def _print_record(record) -> None:
    print(f"run {record.label or record.scheme} [{record.config_hash}]")
    print(f"  dissipator = {record.dissipator}, theta = {record.theta:.4f} rad")
    print(f"  window     = [0, {record.t_end:.1f}] ps, dt = {record.dt:.4g} ps")
    if record.fom is not None:
        fom = record.fom
        print(
            f"  N_a = {fom.n_a:.4f}  I = {fom.indist:.4f}  "
            f"D1 = {fom.d1:.3e}  D2 = {fom.d2:.3e}  F_P = {fom.purcell:.1f}"
        )
    if "exciton" in record.after_pulse:
        print(f"  exciton population after pulse = {record.after_pulse['exciton']:.4f}")
    for path in record.csv_paths.values():
        print(f"  wrote {path}")
    for warning in record.warnings:
        print(f"  warning: {warning}")
    print(f"  wall clock {record.wall_clock_s:.1f} s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdsps",
        description="Pulse-excited quantum-dot cavity single-photon source simulator",
    )
    parser.add_argument("--version", action="version", version=f"qdsps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="config file path or preset name")
        p.add_argument("--outdir", default=None, help="output directory (or $QDSPS_OUTDIR)")
        p.add_argument("--threads", type=int, default=1, help="worker pool size for sweeps")

    p_run = sub.add_parser("run", help="run one scenario")
    add_common(p_run)
    p_run.add_argument(
        "--check",
        action="store_true",
        help="exit 3 when the config's [check] thresholds fail",
    )

    p_sweep = sub.add_parser("sweep", help="run the configured parameter sweep")
    add_common(p_sweep)

    p_tpe = sub.add_parser("tpe-optimize", help="optimize the pulse area for a TPE scenario")
    add_common(p_tpe)

    p_cmp = sub.add_parser(
        "compare-dissipators",
        help="overlay populations for the weak-full, simplified and polaron terms",
    )
    add_common(p_cmp)

    p_presets = sub.add_parser("presets", help="list or emit named presets")
    p_presets.add_argument("action", choices=["list", "emit"])
    p_presets.add_argument("name", nargs="?", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "presets":
        if args.action == "list":
            for name in preset_names():
                print(f"{name:28s} {preset_description(name)}")
            return EXIT_OK
        if args.name is None:
            print("presets emit requires a preset name", file=sys.stderr)
            return EXIT_CONFIG
        try:
            sys.stdout.write(preset_text(args.name))
        except KeyError as exc:
            print(exc.args[0], file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK

    try:
        config = _load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            record = run_scenario(config, outdir=args.outdir, threads=args.threads)
            _print_record(record)
            if args.check and record.check_passed is False:
                print("acceptance check FAILED", file=sys.stderr)
                return EXIT_CHECK
            return EXIT_OK
        if args.command == "sweep":
            records = run_sweep(config, outdir=args.outdir, threads=args.threads)
            print(f"sweep finished: {len(records)} points")
            return EXIT_OK
        if args.command == "tpe-optimize":
            theta, record = optimize_tpe_area(config, outdir=args.outdir)
            print(f"optimal pulse area = {theta:.4f} rad ({theta / 3.141592653589793:.3f} pi)")
            _print_record(record)
            return EXIT_OK
        if args.command == "compare-dissipators":
            path, _ = compare_dissipators(config, outdir=args.outdir)
            print(f"wrote {path}")
            return EXIT_OK
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # engine failure
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
