#!/usr/bin/env python3
"""Plot the convergence history of a study report.csv.

Usage: plot_report.py REPORT.csv [OUT.png]
"""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else path.rsplit(".", 1)[0] + ".png"

    with open(path, newline="") as f:
        rows = [r for r in csv.DictReader(f) if r.get("skipped", "0") != "1"]
    if not rows:
        print("no level rows in " + path, file=sys.stderr)
        return 1

    hs = [float(r["h_cut"]) if float(r["h_cut"]) > 0 else float(r["h_max"]) for r in rows]
    metrics = [m for m in ("geom_error", "l2", "h1", "jump") if m in rows[0]]

    fig, ax = plt.subplots(figsize=(5, 4))
    for m in metrics:
        ax.loglog(hs, [float(r[m]) for r in rows], "o-", label=m)
    # reference slope from the last measured EOC column
    eoc_cols = [c for c in rows[0] if c.startswith("eoc_")]
    if eoc_cols and rows[-1][eoc_cols[0]]:
        p = round(float(rows[-1][eoc_cols[0]]))
        e0 = float(rows[-1][metrics[0]])
        ax.loglog(hs, [e0 * (h / hs[-1]) ** p for h in hs], "k--", lw=0.8, label=f"h^{p}")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.invert_xaxis()
    ax.grid(True, which="both", lw=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
