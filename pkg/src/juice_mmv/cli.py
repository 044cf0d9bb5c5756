"""Command-line entry point.

    juice run --config exp.toml [--out results.csv] [--seed 42]
              [--quick] [--parallelism 4]
    juice converge --config exp.toml --snr-db 16 --trials 100 [--out conv.csv]
    juice validate --config exp.toml

Exit codes: 0 success, 2 invalid configuration, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    SOLVER_ALGORITHMS,
    ExperimentSpec,
    SpecError,
    emit_spec,
    quick_profile,
    run,
    run_convergence_probe,
    validate_spec,
    write_convergence_csv,
)


def _load(args) -> ExperimentSpec:
    spec = validate_spec(args.config)
    if getattr(args, "quick", False):
        spec = quick_profile(spec)
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, system=replace(spec.system, seed=args.seed))
    if getattr(args, "parallelism", None) is not None:
        spec = replace(spec, parallelism=args.parallelism)
    return spec


def _cmd_run(args) -> int:
    spec = _load(args)
    out = args.out if args.out is not None else spec.output_path
    rows = run(spec, csv_path=out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_converge(args) -> int:
    spec = _load(args)
    probed = tuple(a for a in spec.algorithms if a in SOLVER_ALGORITHMS)
    if not probed:
        raise SpecError(f"config lists no solver algorithms; probe needs one of {SOLVER_ALGORITHMS}")
    if probed != spec.algorithms:
        skipped = [a for a in spec.algorithms if a not in probed]
        print(f"note: probing {', '.join(probed)} (skipping {', '.join(skipped)})", file=sys.stderr)
        spec = replace(spec, algorithms=probed)
    rows = run_convergence_probe(spec, args.snr_db, args.trials)
    out = args.out
    if out is None:
        base = Path(spec.output_path)
        out = str(base.with_name(base.stem + "_converge.csv"))
    write_convergence_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_validate(args) -> int:
    spec = validate_spec(args.config)
    sys.stdout.write(emit_spec(spec))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="juice",
        description="Joint device-activity detection and channel estimation benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the configured SNR sweep")
    p_run.add_argument("--config", required=True, help="TOML experiment file")
    p_run.add_argument("--out", default=None, help="output CSV (default: config output_path)")
    p_run.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_run.add_argument("--quick", action="store_true", help="small-system smoke profile")
    p_run.add_argument("--parallelism", type=int, default=None, help="concurrent trial processes")
    p_run.set_defaults(fn=_cmd_run)

    p_conv = sub.add_parser("converge", help="record NASE per inner iteration at one SNR")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--snr-db", type=float, required=True)
    p_conv.add_argument("--trials", type=int, required=True)
    p_conv.add_argument("--out", default=None, help="output CSV (default: <output_path>_converge.csv)")
    p_conv.add_argument("--seed", type=int, default=None)
    p_conv.add_argument("--quick", action="store_true")
    p_conv.set_defaults(fn=_cmd_converge)

    p_val = sub.add_parser("validate", help="check a config and echo its effective form")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(fn=_cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # solver aborts and other runtime failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
