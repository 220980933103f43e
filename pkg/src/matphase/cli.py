"""Command line entry point: ``matphase <scenario> --config path.json [--output-dir dir]``.

Exit status 0 on success, 2 when the config is rejected, 1 when a
validated scenario fails while running.
"""
from __future__ import annotations

import argparse
import sys

from .io import OUTPUT_ENV, SCENARIOS, ConfigError, load_config, run_scenario

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2

SUMMARIES = {
    "rabi": "bare two-level amplitudes under a driving field",
    "dressed": "dressed frequencies and component phases",
    "ramsey": "two-pulse fringe scan over delay and relative phase",
    "madelung": "polar fields and residuals of a propagated packet",
    "doubleslit": "two-branch interference and fringe fit",
    "trajectories": "seeded Bohmian ensemble with histogram checks",
    "interferogram": "harmonic-well overlap signal versus delay",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matphase", description="Run a material-phase scenario from a JSON config.")
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="scenario")
    for name in SCENARIOS:
        p = sub.add_parser(name, help=SUMMARIES.get(name, f"run the {name} scenario"))
        p.add_argument("--config", required=True, help="JSON config document")
        p.add_argument("--output-dir", default=None,
                       help=f"where datasets and the manifest go (default: ${OUTPUT_ENV} or the current directory)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config)
        if cfg.scenario != args.scenario:
            raise ConfigError(f"config describes {cfg.scenario!r}, command asked for {args.scenario!r}", "scenario")
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        manifest = run_scenario(cfg, args.output_dir)
    except Exception as exc:  # surfaced with context, never swallowed silently
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name in manifest.outputs:
        print(name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
