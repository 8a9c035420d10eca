"""Command-line front end.

Exit codes: 0 success, 2 validation failure, 3 task failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .constants import estimate_gn_constant, estimate_sobolev_constant
from .errors import FracNLSError, ManifestError
from .report import (
    conditions_report,
    dumps,
    load_json,
    resolve_constants,
    run,
    sweep,
    validate_manifest,
    validate_sweep,
)
from .spectral import GridDescriptor

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_TASK = 3
EXIT_IO = 4


def _print_errors(exc: ManifestError) -> None:
    for ptr, msg in exc.errors:
        print(f"{ptr or '/'}: {msg}", file=sys.stderr)


def _cmd_validate(args) -> int:
    m = validate_manifest(load_json(args.manifest))
    print(dumps({"valid": True, "regime": m.regime.value, "tasks": list(m.tasks), "manifest_hash": m.hash}), end="")
    return EXIT_OK


def _cmd_run(args) -> int:
    m = validate_manifest(load_json(args.manifest))
    summary = run(m, args.output_dir)
    for entry in summary["tasks"]:
        line = f"{entry['task']:<20} {entry['status']}"
        if entry["status"] != "ok":
            line += f"  {entry['error']}"
        print(line)
    return EXIT_OK if summary["ok"] else EXIT_TASK


def _cmd_sweep(args) -> int:
    spec = validate_sweep(load_json(args.spec))
    rows = sweep(spec, args.output, args.workers)
    for r in rows:
        print(f"{r['axis']}={r['value']!r:<12} {r['status']}" + (f"  {r['message']}" if r["message"] else ""))
    return EXIT_OK if all(r["status"] in ("ok", "invalid") for r in rows) else EXIT_TASK


def _cmd_constants(args) -> int:
    M, L = args.grid
    grid = GridDescriptor(int(args.estimate[0]), int(M), L)
    N, s, r = int(args.estimate[0]), args.estimate[1], args.estimate[2]
    refine = not args.no_refine
    if args.sobolev:
        est = estimate_sobolev_constant(N, s, grid, refine=refine)
    else:
        est = estimate_gn_constant(N, s, r, grid, refine=refine)
    print(dumps(est.to_dict()), end="")
    return EXIT_OK


def _cmd_conditions(args) -> int:
    m = validate_manifest(load_json(args.manifest))
    print(dumps(conditions_report(m.params, resolve_constants(m))), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracnls",
        description="Normalized solutions of mixed fractional Schroedinger equations on a periodic box.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a run manifest")
    p.add_argument("manifest")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="execute a run manifest")
    p.add_argument("manifest")
    p.add_argument("--output-dir", default=None, help="override the manifest's output_dir")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter of a base manifest")
    p.add_argument("spec")
    p.add_argument("--output", default=None, help="CSV path (default: <output_dir>/sweep_<axis>.csv)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("constants", help="estimate a Gagliardo-Nirenberg or Sobolev constant")
    p.add_argument("--estimate", nargs=3, type=float, metavar=("N", "s", "r"), required=True)
    p.add_argument("--grid", nargs=2, type=float, metavar=("M", "L"), default=(128, 12.0))
    p.add_argument("--sobolev", action="store_true", help="estimate the Sobolev constant (r is ignored)")
    p.add_argument("--no-refine", action="store_true", help="skip the 2M refinement run")
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("conditions", help="print the admissibility report of a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=_cmd_conditions)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ManifestError as exc:
        _print_errors(exc)
        return EXIT_INVALID
    except json.JSONDecodeError as exc:
        print(f"/: not valid JSON ({exc})", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FracNLSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_TASK


if __name__ == "__main__":
    sys.exit(main())
