"""Command-line front end.

Subcommands map one-to-one onto the harness experiments:

    oamtomo rank-analysis  --spec spec.json --out results/
    oamtomo error-sweep    --spec spec.json --out results/ --threads 4
    oamtomo entropy-sweep  --spec spec.json
    oamtomo reconstruct    --spec spec.json
    oamtomo simulate       --spec spec.json
    oamtomo validate       --set scan_file=scan.csv

Exit codes: 0 success, 2 spec validation error, 3 data format error,
4 non-convergence under --strict.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import (
    NonConvergenceError,
    SpecValidationError,
    load_spec,
    parse_spec,
    run_experiment,
)
from .qstate import StateValidationError
from .sensor import ScanFormatError

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_DATA = 3
EXIT_NONCONVERGED = 4

_SUBCOMMANDS = {
    "rank-analysis": "rank_analysis",
    "error-sweep": "error_sweep",
    "entropy-sweep": "entropy_sweep",
    "reconstruct": "reconstruct",
    "simulate": "simulate",
    "validate": "validate",
}


def _apply_override(obj: dict, assignment: str) -> None:
    """Apply a dotted --set key=value override; values parse as JSON first."""
    if "=" not in assignment:
        raise SpecValidationError([f"--set expects key=value, got {assignment!r}"])
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    target = obj
    parts = key.split(".")
    for part in parts[:-1]:
        target = target.setdefault(part, {})
        if not isinstance(target, dict):
            raise SpecValidationError([f"--set path {key!r} collides with a scalar field"])
    target[parts[-1]] = value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamtomo",
        description="Compressive tomography of OAM photon states from intensity scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--spec", help="JSON experiment spec file")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--seed", type=int, help="master seed override")
        cmd.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
        cmd.add_argument("--strict", action="store_true", help="fail on non-convergence")
        cmd.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a spec field (dotted path, JSON value)",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    kind = _SUBCOMMANDS[args.command]
    try:
        if args.spec:
            with open(args.spec) as fh:
                try:
                    obj = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise SpecValidationError([f"spec file is not valid JSON: {exc}"]) from exc
        else:
            obj = {}
        for assignment in args.overrides:
            _apply_override(obj, assignment)
        if args.seed is not None:
            obj["seed"] = args.seed
        spec = parse_spec(obj, kind=kind)
        spec.threads = max(1, args.threads)
        spec.strict = bool(args.strict)
        result = run_experiment(spec, out_dir=args.out)
        if kind == "validate":
            if result:
                for problem in result:
                    print(problem, file=sys.stderr)
                return EXIT_DATA
            print("all files valid")
            return EXIT_OK
        if kind == "rank_analysis":
            for z, n in result:
                print(f"Z={z}: n_Z={n}")
        elif kind in ("error_sweep", "entropy_sweep"):
            print(f"wrote {len(result)} sweep cells")
        elif kind == "reconstruct":
            print(f"report written to {result['report_file']}")
        elif kind == "simulate":
            print(f"scan written to {result}")
        return EXIT_OK
    except SpecValidationError as exc:
        print(exc, file=sys.stderr)
        return EXIT_SPEC
    except (ScanFormatError, StateValidationError, FileNotFoundError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_DATA
    except NonConvergenceError as exc:
        print(exc, file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
