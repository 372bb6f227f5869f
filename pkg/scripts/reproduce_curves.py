"""Write EF-vs-alpha curves for all three systems to a CSV file.

    python3 scripts/reproduce_curves.py --out curves.csv
"""

import argparse
import csv

import numpy as np

from womlab.analytic import ef_baseline, ef_cp_multiwrite, ef_cp_optimal, ef_naive
from womlab.numerics import DomainError


def curve_rows(step, t_max):
    for a in np.round(np.arange(0.05, 0.95 + 1e-9, step), 4):
        row = {"alpha": a, "baseline": ef_baseline(a).ef}
        try:
            row["naive_wom"] = ef_naive(a, 0.77, 2).ef
        except DomainError:
            row["naive_wom"] = ""
        row["cp_wom"] = ef_cp_optimal(a).ef
        for t in range(3, t_max + 1):
            try:
                row[f"cp_wom_t{t}"] = ef_cp_multiwrite(a, t).ef
            except DomainError:
                row[f"cp_wom_t{t}"] = ""
        yield row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="curves.csv")
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--t-max", type=int, default=3)
    args = ap.parse_args()
    rows = list(curve_rows(args.step, args.t_max))
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
