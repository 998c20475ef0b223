"""Command-line entry point.

    oamlink run <config> [--seed N] [--mode analytic|sampled] [--out DIR] [--format json|csv]
    oamlink validate <config>
    oamlink list-scenarios
    oamlink version

Exit codes: 0 success, 1 invalid config, 2 runtime or convergence failure.
Without ``--out`` the output directory falls back to ``$OAMLINK_OUT``; with
neither, JSON goes to stdout and CSV tables are printed one after another.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import SCENARIOS, ConfigError, golden_configs, load, with_overrides
from .harness import ScenarioError, run_scenario
from .report import emit_report, write_report

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oamlink", description="OAM up-conversion experiment simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--mode", choices=("analytic", "sampled"), help="override the config mode")
    run.add_argument("--out", help="output directory (default: $OAMLINK_OUT, else stdout)")
    run.add_argument("--format", choices=("json", "csv"), default="json")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")

    sub.add_parser("list-scenarios", help="list scenario names and shipped configs")
    sub.add_parser("version", help="print the toolkit version")
    return parser


def _resolve(path: str) -> str:
    """Allow shipped config names (``oam-chsh``) in place of paths."""
    if not os.path.exists(path):
        golden = golden_configs()
        if path in golden:
            return str(golden[path])
    return path


def main(argv=None) -> int:
    args = _parser().parse_args(argv)

    if args.command == "version":
        print(f"oamlink {__version__}")
        return EXIT_OK
    if args.command == "list-scenarios":
        for name in SCENARIOS:
            print(name)
        print("\nshipped configs:")
        for stem, path in golden_configs().items():
            print(f"  {stem:28s} {path}")
        return EXIT_OK

    try:
        cfg = load(_resolve(args.config))
        if args.command == "validate":
            print(f"{args.config}: ok ({cfg.scenario}, mode={cfg.mode}, seed={cfg.seed})")
            return EXIT_OK
        cfg = with_overrides(cfg, seed=args.seed, mode=args.mode)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID

    try:
        report = run_scenario(cfg)
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return EXIT_RUNTIME

    out = args.out or os.environ.get("OAMLINK_OUT")
    if out:
        try:
            for path in write_report(report, out, args.format):
                print(path)
        except OSError as exc:
            print(exc, file=sys.stderr)
            return EXIT_RUNTIME
        return EXIT_OK

    payload = emit_report(report, args.format)
    if args.format == "json":
        sys.stdout.write(payload.decode())
    else:
        for name, content in payload.items():
            sys.stdout.write(f"# {name}\n{content.decode()}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
