"""Command line entry point.

Exit codes: 0 success, 1 invalid configuration, 2 analysis or numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, json_schema, parse_config
from .runner import run_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_FAILURE = 0, 1, 2
_SUBSET = {"classify": ["classify"], "sweep": ["resolvent_sweep"], "gcc": ["gcc_check"]}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kgstab", description="Stability analysis of damped fractional Klein-Gordon equations.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "run every analysis listed in the scenario"),
        ("classify", "estimate control conditions and predict the stability class"),
        ("sweep", "run the resolvent sweep only"),
        ("gcc", "run the control-condition estimators only"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="scenario file (TOML)")
        sp.add_argument("-o", "--output", help="output directory (overrides the scenario)")
        sp.add_argument("-q", "--quiet", action="store_true", help="suppress progress messages")
    st = sub.add_parser("selftest", help="run the built-in oracle checks")
    st.add_argument("-q", "--quiet", action="store_true")
    sub.add_parser("schema", help="print the scenario JSON schema")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(json_schema(), indent=2))
        return EXIT_OK
    if args.command == "selftest":
        from .selftest import run_selftest

        return EXIT_OK if run_selftest(verbose=not args.quiet) else EXIT_FAILURE
    try:
        scn = parse_config(args.config)
    except ConfigError as exc:
        print(f"kgstab: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.command in _SUBSET:
        scn = scn.model_copy(update={"analyses": _SUBSET[args.command]})
    log = (lambda msg: None) if args.quiet else (lambda msg: print(f"[kgstab] {msg}", file=sys.stderr))
    try:
        report = run_scenario(scn, args.output, log)
    except OSError as exc:
        print(f"kgstab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for entry in report.data["orders"]:
        parts = [f"s={entry['s']:g}"]
        if "prediction" in entry:
            pred = entry["prediction"]
            rate = pred["rate_exact"] or pred["rate"]
            parts.append(f"predicted={pred['tag']}" + (f"({rate})" if rate is not None else ""))
        if "fit" in entry:
            parts.append(f"fitted={entry['fit']['model']} rate={entry['fit']['semigroup_rate']:.4g}")
        if "conformance" in entry:
            parts.append(f"conformance={entry['conformance']['status']}")
        if "resolvent_sweep" in entry:
            parts.append(f"sup_constant={entry['resolvent_sweep']['sup_constant']:.4g}")
        print("  ".join(parts))
    if "gcc" in report.data:
        print("gcc: " + ", ".join(f"{k}={v}" for k, v in report.data["gcc"]["summary"].items()))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
