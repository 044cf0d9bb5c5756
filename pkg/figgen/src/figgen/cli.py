"""CLI: figgen --sweep <csv> --converge <csv> --out <path> [--dump]."""

import argparse
import sys
from pathlib import Path

from .render import FigError, PlotSpec, dump_series, render


def build_parser():
    p = argparse.ArgumentParser(
        prog="figgen",
        description="Render the three-panel benchmark figure from juice CSV output.",
    )
    p.add_argument("--sweep", required=True, help="sweep results CSV (NASE/SRR vs SNR)")
    p.add_argument("--converge", required=True, help="convergence probe CSV (NASE vs iteration)")
    p.add_argument("--out", required=True, help="output image path (extension picks the format)")
    p.add_argument("--dump", action="store_true",
                   help="print the exact plotted (x, y) series to stdout")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        sweep_csv=Path(args.sweep),
        converge_csv=Path(args.converge),
        out_path=Path(args.out),
    )
    try:
        panels = render(spec)
    except FigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.dump:
        print(dump_series(panels))
    return 0


if __name__ == "__main__":
    sys.exit(main())
