"""Command line front end.

Exit codes: 0 when every requested check passed, 1 when a check failed,
2 for configuration or enumeration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .bounds import (
    BoundsParams,
    InvalidCode,
    NotGoodPair,
    ParamsOutOfRange,
    bounds_report,
    check_binom_scaling,
    check_counting_bound,
    space_lower_bound,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    default_demo_config,
    default_fp_config,
    default_verify_config,
    fp_report_csv,
    parse_fraction,
    run_decode,
    run_encode,
    run_fp_experiment,
    run_verification_suite,
    run_violation_demo,
)
from .witness import EnumerationTooLarge

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def _load_config(args: argparse.Namespace, defaults: ExperimentConfig) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg = config_from_dict(data, defaults)
    overrides = {}
    if args.seed_bits is not None:
        overrides["seed_bits"] = args.seed_bits
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        cfg = config_from_dict(overrides, cfg)
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _report_text(report: dict, fmt: str) -> str:
    if fmt == "csv" and report.get("command") == "fp-rate":
        return fp_report_csv(report)
    return json.dumps(report, sort_keys=True, indent=2)


def _cmd_fp_rate(args: argparse.Namespace) -> int:
    cfg = _load_config(args, default_fp_config())
    report = run_fp_experiment(cfg)
    _emit(_report_text(report, args.format), args.out)
    return EXIT_PASS if report["passed"] else EXIT_CHECK_FAILED


def _cmd_demo(args: argparse.Namespace) -> int:
    cfg = _load_config(args, default_demo_config())
    report = run_violation_demo(cfg)
    _emit(_report_text(report, args.format), args.out)
    return EXIT_PASS if report["passed"] else EXIT_CHECK_FAILED


def _cmd_verify(args: argparse.Namespace) -> int:
    cfg = _load_config(args, default_verify_config())
    report = run_verification_suite(cfg)
    _emit(report.to_json(), args.out)
    return EXIT_PASS if report.passed else EXIT_CHECK_FAILED


def _cmd_bounds(args: argparse.Namespace) -> int:
    checks = []
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read bounds config: {exc}") from exc
        checks = data.get("bounds_checks", [])
        if not isinstance(checks, list):
            raise ConfigError("bounds_checks must be a list")
    if not checks:
        raise ConfigError("bounds needs a config with a bounds_checks list")
    results = []
    for entry in checks:
        try:
            kind = entry["check"]
            if kind == "counting":
                params = BoundsParams(
                    u=int(entry["u"]),
                    n=int(entry["n"]),
                    eps_minus=parse_fraction(entry.get("eps_minus", "0")),
                    p_fail=parse_fraction(entry.get("p_fail", "0")),
                    alpha=parse_fraction(entry.get("alpha", "2")),
                )
                results.append(
                    check_counting_bound(int(entry["fspace_bits"]), params)
                )
            elif kind == "binom_scaling":
                results.append(
                    check_binom_scaling(
                        int(entry["u"]),
                        int(entry["n"]),
                        parse_fraction(entry["beta"]),
                    )
                )
            elif kind == "space":
                results.append(
                    space_lower_bound(
                        entry.get("kind", "nstatic"),
                        int(entry["u"]),
                        int(entry["n"]),
                        parse_fraction(entry.get("eps", "0")),
                    )
                )
            else:
                raise ConfigError(f"unknown bounds check {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad bounds check entry {entry!r}: {exc}") from exc
    _emit(bounds_report(results), args.out)
    failed = any(getattr(r, "holds", True) is False for r in results)
    return EXIT_CHECK_FAILED if failed else EXIT_PASS


def _cmd_encode(args: argparse.Namespace) -> int:
    cfg = _load_config(args, default_verify_config())
    try:
        elements = [int(part) for part in args.elements.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad element list {args.elements!r}") from exc
    report = run_encode(cfg, elements)
    _emit(_report_text(report, args.format), args.out)
    return EXIT_PASS


def _cmd_decode(args: argparse.Namespace) -> int:
    cfg = _load_config(args, default_verify_config())
    report = run_decode(cfg, args.state, args.index)
    _emit(_report_text(report, args.format), args.out)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filterbounds",
        description="Membership filter experiments and bound verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed-bits", type=int, default=None, dest="seed_bits")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", default=None, help="write the report here")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("fp-rate", help="Monte-Carlo false-positive rate")
    common(p)
    p.set_defaults(func=_cmd_fp_rate)

    p = sub.add_parser("demo-violations", help="deterministic failure demos")
    common(p)
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("verify", help="run the exhaustive verification suite")
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bounds", help="evaluate bound checks from a config")
    common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("encode", help="code a dataset as (state, index)")
    common(p)
    p.add_argument("--elements", required=True, help="comma separated elements")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="recover a dataset from (state, index)")
    common(p)
    p.add_argument("--state", required=True, help="serialized paired state")
    p.add_argument("--index", required=True, type=int)
    p.set_defaults(func=_cmd_decode)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        EnumerationTooLarge,
        ParamsOutOfRange,
        NotGoodPair,
        InvalidCode,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
