"""Run the page-level simulator against the analytic models and print a table."""

import argparse

from womlab.cli import SweepSpec, cmd_simulate, format_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", default="0.1,0.3,0.5,0.7")
    ap.add_argument("--writes", type=int, default=2_000_000)
    ap.add_argument("--blocks", type=int, default=2048)
    ap.add_argument("--pages-per-block", type=int, default=256)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    rows = []
    for a in (float(x) for x in args.alphas.split(",")):
        spec = SweepSpec(
            alpha_range=(a, a, 1.0),
            systems=["baseline", "naive_wom", "cp_wom"],
            sim=True,
            sim_overrides={"blocks": args.blocks, "pages_per_block": args.pages_per_block,
                           "writes": args.writes, "seed": args.seed},
        )
        rows += cmd_simulate(spec, args.jobs)
    print(format_rows(rows, "csv"), end="")
    worst = max((r["rel_err"] for r in rows if r["rel_err"] not in ("", None)), default=0.0)
    print(f"# worst relative error {worst:.4f}")


if __name__ == "__main__":
    main()
