"""Command line front end: ``stochhjb run | validate | report``.

Exit codes: 0 pass, 1 check failure (or a failing module), 2 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .campaigns import OutputConflict, load_reports, run_campaign
from .config import parse_config
from .errors import ConfigError, ConvergenceError, OracleError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _load(args):
    rc = parse_config(args.config)
    return rc.with_overrides(seed=args.seed, output=args.out, workers=args.workers)


def cmd_validate(args) -> int:
    rc = _load(args)
    print(f"ok  campaign={rc.campaign}  config_hash={rc.hash}")
    print(json.dumps(rc.data, sort_keys=True, indent=2))
    return EXIT_PASS


def cmd_run(args) -> int:
    rc = _load(args)
    outcome = run_campaign(rc)
    status = "PASS" if outcome.passed else "FAIL"
    print(f"{status}  campaign={rc.campaign}  config_hash={rc.hash}  out={outcome.directory}")
    return EXIT_PASS if outcome.passed else EXIT_FAIL


def _render(entry) -> str:
    s = entry["summary"]
    lines = [f"{entry['directory']}  [{entry['config_hash']}]  {s['campaign']}: "
             f"{'PASS' if s['passed'] else 'FAIL'}"]
    for key in sorted(s):
        if key in ("campaign", "passed", "config_hash", "seeds"):
            continue
        lines.append(f"  {key:>24s}  {s[key]}")
    for row in s.get("seeds", []):
        lines.append("  " + json.dumps(row, sort_keys=True))
    return "\n".join(lines)


def cmd_report(args) -> int:
    root = Path(args.out or "out")
    entries = load_reports(root)
    if not entries:
        print(f"no campaign summaries under {root}", file=sys.stderr)
        return EXIT_CONFIG
    for e in entries:
        print(_render(e))
    return EXIT_PASS if all(e["summary"]["passed"] for e in entries) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochhjb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_config in (("run", cmd_run, True), ("validate", cmd_validate, True),
                                   ("report", cmd_report, False)):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=needs_config, help="YAML run config")
        p.add_argument("--seed", type=int, default=None, help="override the first seed")
        p.add_argument("--out", default=None, help="output root (report: tree to summarise)")
        p.add_argument("--workers", type=int, default=None, help="process pool size")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputConflict as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # a module refused its preconditions for this configuration
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OracleError, ConvergenceError, FloatingPointError) as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
