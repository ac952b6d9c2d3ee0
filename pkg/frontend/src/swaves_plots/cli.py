"""Batch figure rendering.

Exit codes: 0 success, 2 bad arguments or malformed/out-of-range inputs.
"""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .figures import SchemaError, plot_cdf, plot_heatmap


def _cmd_cdf(args) -> int:
    group_by = [k.strip() for k in args.group_by.split(",") if k.strip()]
    if not group_by:
        print("error: --group-by needs at least one key", file=sys.stderr)
        return 2
    try:
        fig, groups, written = plot_cdf(args.glob, group_by, args.out)
    except (SchemaError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    plt.close(fig)
    print(f"cdf: {len(groups)} group(s), wrote {' '.join(written)}")
    return 0


def _cmd_heatmap(args) -> int:
    try:
        fig, mat, written = plot_heatmap(args.in_path, args.out)
    except (SchemaError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    plt.close(fig)
    print(f"heatmap: {mat.shape[0]} VNF(s) x {mat.shape[1]} cell(s), "
          f"wrote {' '.join(written)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plot", description="Render figures from simulator sweep outputs."
    )
    sub = p.add_subparsers(dest="command", required=True)

    cdf = sub.add_parser("cdf", help="per-user unsuccessful-ratio CDFs")
    cdf.add_argument("--glob", required=True,
                     help="pattern matching per_user.csv files")
    cdf.add_argument("--group-by", default="strategy,alpha",
                     help="summary.json keys that define one line")
    cdf.add_argument("--out", required=True, help="output image (SVG + PNG)")
    cdf.set_defaults(func=_cmd_cdf)

    hm = sub.add_parser("heatmap", help="demand-probability cell grid per VNF")
    hm.add_argument("--in", dest="in_path", required=True,
                    help="forecast_t*.csv dump")
    hm.add_argument("--out", required=True, help="output image (SVG + PNG)")
    hm.set_defaults(func=_cmd_heatmap)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
