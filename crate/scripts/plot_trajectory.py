#!/usr/bin/env python3
"""Render a tropkin trajectory CSV to SVG.

Optional helper, not part of the tested surface. Requires matplotlib.

Usage:
    plot_trajectory.py trajectory.csv [out.svg] [--vars y3,y4] [--logy]
    plot_trajectory.py trajectory.csv out.svg --phase y3,y4
"""

import argparse
import csv
import sys


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("csv_path")
    ap.add_argument("svg_path", nargs="?", default=None)
    ap.add_argument("--vars", help="comma-separated variables to plot (default: all)")
    ap.add_argument("--phase", help="two variables for a phase-plane plot, e.g. y3,y4")
    ap.add_argument("--logy", action="store_true")
    args = ap.parse_args()

    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    with open(args.csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    names = header[1:-1]  # strip t and mode
    t = [float(r[0]) for r in rows]
    cols = {name: [float(r[i + 1]) for r in rows] for i, name in enumerate(names)}

    fig, ax = plt.subplots(figsize=(7, 4.5))
    if args.phase:
        a, b = (s.strip() for s in args.phase.split(","))
        ax.plot(cols[a], cols[b], lw=0.8)
        ax.set_xlabel(a)
        ax.set_ylabel(b)
    else:
        wanted = [s.strip() for s in args.vars.split(",")] if args.vars else names
        for name in wanted:
            ax.plot(t, cols[name], lw=0.8, label=name)
        ax.set_xlabel("t")
        ax.legend(loc="best", fontsize=8)
        if args.logy:
            ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    out = args.svg_path or args.csv_path.rsplit(".", 1)[0] + ".svg"
    fig.tight_layout()
    fig.savefig(out)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
