"""``distill`` command line: analyze, simulate, audit.

Exit codes: 0 success, 2 usage/validation error, 3 capacity error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .bellcore import BellDiagonalDist
from .errors import CapacityError, UsageError, ValidationError
from .experiment import (
    AUDIT_MODES,
    FORMATS,
    SCHEMA_VERSION,
    SCHEMAS,
    ExperimentConfig,
    analytic_block,
    audit_report,
    canonical_json,
    load_events,
    parse_dist,
    render,
    run_simulation,
)
from .protocol import STRATEGIES

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_IO = 0, 2, 3, 4

# Flag name -> ExperimentConfig field.
_CONFIG_KEYS = {
    "dist": "dist",
    "n": "n",
    "strategy": "strategy",
    "budget": "budget",
    "delta": "delta",
    "trials": "trials",
    "seed": "master_seed",
    "epsilon": "epsilon",
    "audit_mode": "audit_mode",
    "record_events": "record_events",
    "out": "output",
    "format": "format",
}


def cmd_analyze(dist: BellDiagonalDist, n: int | None = None, budget: int | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "dist": list(dist.probs),
        "n": n,
        "analytic": analytic_block(dist, n, budget),
    }


def cmd_simulate(config: ExperimentConfig, workers: int = 1) -> dict:
    return run_simulation(config, workers=workers)


def cmd_audit(dist: BellDiagonalDist, n: int, events_path: str | Path,
              trial: int | None = None, mode: str = "auto") -> dict:
    data = json.loads(Path(events_path).read_text())
    return audit_report(dist, n, load_events(data, trial), mode)


def _parse_budget(text):
    if text is None or text == "auto":
        return text
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ValidationError(f"budget must be an integer or 'auto', got {text!r}") from None


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Merge ``--config`` file values with flags; flags win."""
    values: dict = {}
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        values.update({_CONFIG_KEYS[k]: v for k, v in data.items()})
    for flag, key in _CONFIG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None and value is not False:
            values[key] = value
    if "dist" not in values or "n" not in values:
        raise ValidationError("simulate needs --dist and --n (from flags or --config)")
    values["dist"] = parse_dist(values["dist"])
    if "budget" in values:
        values["budget"] = _parse_budget(values["budget"])
    return ExperimentConfig(**values)


def _emit(report: dict, out: str | None, fmt: str) -> None:
    text = render(report, fmt)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distill",
        description="Bell-diagonal distillation as local discrimination of likely strings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form entropy, DI, MDI, yield and budget")
    p.add_argument("--dist", required=True, help="p1,p2,p3,p4 over Phi+,Phi-,Psi+,Psi-")
    p.add_argument("--n", type=int)
    p.add_argument("--budget", type=int, help="measured-pair count for the predicted residual")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte Carlo trials with exact audits")
    p.add_argument("--config", help="JSON file with any of the flag values")
    p.add_argument("--dist")
    p.add_argument("--n", type=int)
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--budget", help="integer or 'auto'")
    p.add_argument("--delta", type=int, help="surplus measurements added to an auto budget")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--epsilon", type=float, help="residual entropy (bits) counted as resolved")
    p.add_argument("--audit-mode", dest="audit_mode", choices=AUDIT_MODES)
    p.add_argument("--record-events", dest="record_events", action="store_true",
                   help="keep each trial's measurement events in the JSON report")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", choices=FORMATS)

    p = sub.add_parser("audit", help="replay an events log through the exact posterior")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--events", required=True, help="events log, events list or recorded report")
    p.add_argument("--trial", type=int, help="trial index when --events is a simulation report")
    p.add_argument("--audit-mode", dest="audit_mode", choices=("auto", "exact", "xsector"), default="auto")
    p.add_argument("--out")

    p = sub.add_parser("schema", help="print a published JSON schema")
    p.add_argument("name", choices=sorted(SCHEMAS))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            report = cmd_analyze(parse_dist(args.dist), args.n, args.budget)
            _emit(report, args.out, "json")
        elif args.command == "simulate":
            if args.workers < 1:
                raise ValidationError("--workers must be >= 1")
            config = config_from_args(args)
            report = cmd_simulate(config, workers=args.workers)
            _emit(report, config.output, config.format)
        elif args.command == "audit":
            report = cmd_audit(parse_dist(args.dist), args.n, args.events, args.trial, args.audit_mode)
            _emit(report, args.out, "json")
        elif args.command == "schema":
            sys.stdout.write(canonical_json(SCHEMAS[args.name]))
    except (ValidationError, UsageError, json.JSONDecodeError) as exc:
        print(f"distill: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"distill: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"distill: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
