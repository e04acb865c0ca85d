#!/usr/bin/env python3
"""Plot one column of a casimir-cavity CSV against another.

Columns to the left of the x column (Omega, placement, constraint, ...)
split the data into one curve per distinct value.

    python3 scripts/plot.py fig1.csv --x x_d --y energy -o fig1.png
"""

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv")
    ap.add_argument("--x", required=True)
    ap.add_argument("--y", required=True)
    ap.add_argument("--logx", action="store_true")
    ap.add_argument("-o", "--output", help="image file (default: <csv>.png)")
    args = ap.parse_args()

    with open(args.csv, newline="") as f:
        rows = list(csv.reader(line for line in f if not line.startswith("#")))
    header, data = rows[0], rows[1:]
    xi, yi = header.index(args.x), header.index(args.y)
    keys = list(range(xi))

    curves = defaultdict(lambda: ([], []))
    for r in data:
        label = ", ".join(f"{header[k]}={r[k]}" for k in keys)
        xs, ys = curves[label]
        xs.append(float(r[xi]))
        ys.append(float(r[yi]))

    fig, ax = plt.subplots()
    for label, (xs, ys) in curves.items():
        ax.plot(xs, ys, label=label or None)
    if args.logx:
        ax.set_xscale("log")
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y)
    if len(curves) > 1:
        ax.legend()
    fig.savefig(args.output or args.csv + ".png", dpi=150, bbox_inches="tight")


if __name__ == "__main__":
    main()
