"""Command line interface for the quantum online-algorithm experiments."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from .instances import load_fingerprint_config
from .reports import format_report, format_verification, render_scenarios
from .scenarios import DEFAULT_TRIALS, MODES, ScenarioConfig, list_scenarios, run_scenario


def build_argument_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qonline",
        description="Exact and Monte-Carlo experiments with quantum online algorithms",
    )
    parser.add_argument(
        "scenario",
        nargs="?",
        help="Scenario id (see --list-scenarios)",
    )
    parser.add_argument(
        "--list-scenarios",
        action="store_true",
        help="List the registered scenarios and exit",
    )
    parser.add_argument(
        "--verify-fingerprint",
        type=Path,
        metavar="CONFIG",
        help="Re-verify a fingerprint configuration JSON file and exit",
    )
    parser.add_argument(
        "--params",
        dest="params",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Scenario parameter (may be specified multiple times)",
    )
    parser.add_argument(
        "--mode",
        default="exact",
        choices=list(MODES),
        help="Exact branch enumeration or Monte-Carlo sampling (default: exact)",
    )
    parser.add_argument(
        "--trials",
        type=int,
        default=DEFAULT_TRIALS,
        help=f"Monte-Carlo trials shared by the instance family (default: {DEFAULT_TRIALS})",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Root seed for sampling and generated instances (default: 0)",
    )
    parser.add_argument(
        "--out",
        dest="output",
        type=Path,
        help="Optional output file. Defaults to stdout.",
    )
    parser.add_argument(
        "--instances",
        type=Path,
        help="Instance file replacing the generated family",
    )
    parser.add_argument(
        "--format",
        default="text",
        choices=["text", "json"],
        help="Report format (default: text)",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log progress and per-instance detail to stderr",
    )
    return parser


def _parse_params(items: Sequence[str]) -> Dict[str, str]:
    params: Dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"--params expects KEY=VALUE, got {item!r}")
        params[key.strip()] = value.strip()
    return params


def _emit(rendered: str, output: Optional[Path]) -> None:
    if output:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(rendered + "\n")
    else:
        print(rendered)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_argument_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.list_scenarios:
        print(render_scenarios(list_scenarios()))
        return 0

    if args.verify_fingerprint is not None:
        try:
            fingerprint = load_fingerprint_config(args.verify_fingerprint)
        except (FileNotFoundError, ValueError) as exc:
            parser.error(str(exc))
        verification = fingerprint.verify()
        _emit(format_verification(fingerprint, verification, args.format), args.output)
        return 0 if verification.passed else 1

    if not args.scenario:
        parser.error("a scenario id is required (or --list-scenarios)")

    try:
        config = ScenarioConfig(
            scenario=args.scenario,
            params=_parse_params(args.params),
            mode=args.mode,
            trials=args.trials,
            seed=args.seed,
            output=args.output,
            instances=args.instances,
            format=args.format,
        )
        report = run_scenario(config)
    except (FileNotFoundError, ValueError) as exc:
        parser.error(str(exc))
    except RuntimeError as exc:
        print(f"error running {args.scenario}: {exc}", file=sys.stderr)
        return 2

    _emit(format_report(report, config.format), config.output)
    return report.exit_code()


if __name__ == "__main__":  # pragma: no cover - CLI entrypoint
    sys.exit(main())
