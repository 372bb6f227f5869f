"""``womlab`` command line: analytic sweeps, simulations, crossover points.

    womlab analytic --sweep 0.05:0.95:0.01 --system baseline,cp_wom
    womlab simulate --alpha 0.5 --system baseline --writes 1000000 --check 0.05
    womlab crossover naive_wom baseline --rate 0.77

Options may also come from a ``--config`` file of ``key=value`` lines (keys are
long option names); command-line flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analytic import (
    FIXED_RATE_T2,
    InfeasibleError,
    NoCrossoverError,
    System,
    SystemParams,
    ef_cp_given_gamma1,
    ef_cp_optimal,
    ef_naive,
    evaluate,
    find_crossover,
)
from .ftl_sim import SimConfig, run
from .numerics import DomainError

COLUMNS = [
    "alpha", "system", "t", "R", "ef_analytic", "ef_sim", "rel_err",
    "gamma1", "gamma2", "alpha_prime", "beta_prime", "feasible", "seed",
]

_SYSTEM_ORDER = {s: k for k, s in enumerate(System)}


class UsageError(ValueError):
    pass


@dataclass
class SweepSpec:
    alpha_range: tuple
    systems: list
    t_list: list = field(default_factory=lambda: [2])
    rates: dict = field(default_factory=dict)
    gamma1: Optional[float] = None
    sim: bool = False
    sim_overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        start, stop, step = self.alpha_range
        if not (0.0 < start <= stop < 1.0):
            raise UsageError(f"alpha range must satisfy 0 < start <= stop < 1, got {start}:{stop}")
        if not step > 0.0:
            raise UsageError("alpha step must be positive")
        self.systems = sorted({System.parse(s) for s in self.systems}, key=_SYSTEM_ORDER.get)
        self.t_list = sorted(set(int(t) for t in self.t_list))
        if any(t < 2 for t in self.t_list):
            raise UsageError("write counts must be >= 2")
        if System.NAIVE_WOM in self.systems:
            for t in self.t_list:
                if t != 2 and self.rate_for(t) is None:
                    raise UsageError(f"naive-WOM with t={t} needs --rate {t}=R")
        if self.sim and any(t != 2 for t in self.t_list):
            raise UsageError("simulation covers two-write systems only (--t 2)")

    def alphas(self) -> list:
        start, stop, step = self.alpha_range
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(n)]

    def rate_for(self, t: int) -> Optional[float]:
        if t in self.rates:
            return self.rates[t]
        if None in self.rates:
            return self.rates[None]
        return FIXED_RATE_T2 if t == 2 else None

    def points(self) -> list:
        out = []
        for a in self.alphas():
            for s in self.systems:
                for t in ([1] if s is System.BASELINE else self.t_list):
                    out.append((a, s, t))
        return out


def _blank_row(alpha: float, system: System, t: int) -> dict:
    row = dict.fromkeys(COLUMNS)
    row.update(alpha=alpha, system=system.value, t=t)
    return row


def _fill_solution(row: dict, res) -> None:
    sol = res.solution
    row["ef_analytic"] = res.ef
    row["gamma1"] = sol.get("gamma1")
    row["gamma2"] = sol.get("gamma2")
    row["alpha_prime"] = sol.get("alpha_prime")
    row["beta_prime"] = sol.get("beta_prime")
    if "R" in sol:
        row["R"] = sol["R"]


def analytic_row(spec: SweepSpec, point) -> dict:
    alpha, system, t = point
    row = _blank_row(alpha, system, t)
    R = spec.rate_for(t) if system is System.NAIVE_WOM else None
    row["R"] = R
    try:
        if system is System.CP_WOM and t == 2 and spec.gamma1 is not None:
            res = ef_cp_given_gamma1(alpha, spec.gamma1)
        else:
            res = evaluate(system, alpha, t, R)
    except (InfeasibleError, DomainError):
        row["feasible"] = False
        return row
    _fill_solution(row, res)
    row["solution"] = res.solution
    row["feasible"] = True
    return row


def cmd_analytic(spec: SweepSpec) -> list:
    return [analytic_row(spec, p) for p in spec.points()]


def simulate_row(spec: SweepSpec, point) -> dict:
    alpha, system, t = point
    ov = spec.sim_overrides
    Z = ov.get("pages_per_block", 256)
    params = SystemParams.from_alpha(alpha, Z=Z, blocks=ov.get("blocks", 2048))
    a_eff = params.alpha
    row = _blank_row(a_eff, system, t)
    row["seed"] = ov.get("seed", 0)
    R = spec.rate_for(2) if system is System.NAIVE_WOM else None
    row["R"] = R
    gamma1 = None
    try:
        if system is System.BASELINE:
            res = evaluate(system, a_eff)
        elif system is System.NAIVE_WOM:
            # the simulated block holds round(R*Z) pages, so compare at that rate
            res = ef_naive(a_eff, round(R * Z) / Z, 2)
        else:
            gamma1 = spec.gamma1
            if gamma1 is None:
                gamma1 = ef_cp_optimal(a_eff).solution["gamma1"]
            res = ef_cp_given_gamma1(a_eff, gamma1)
        cfg = SimConfig(
            system, params, R=R if R is not None else FIXED_RATE_T2, gamma1=gamma1,
            measured_writes=ov.get("writes", 10_000_000),
            warmup_writes=ov.get("warmup"), seed=row["seed"],
        )
    except (InfeasibleError, DomainError):
        row["feasible"] = False
        return row
    report = run(cfg)
    _fill_solution(row, res)
    if system is System.CP_WOM:
        row["gamma2"] = report.gamma2_measured
        row["solution"] = dict(res.solution, gamma2_measured=report.gamma2_measured)
    else:
        row["solution"] = res.solution
    row["ef_sim"] = report.ef
    row["rel_err"] = abs(report.ef - res.ef) / res.ef
    row["feasible"] = True
    return row


def cmd_simulate(spec: SweepSpec, jobs: int = 1) -> list:
    points = spec.points()
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(simulate_row, [spec] * len(points), points))
    return [simulate_row(spec, p) for p in points]


def cmd_crossover(system_a, system_b, R: Optional[float] = None, t: int = 2) -> float:
    return find_crossover(system_a, system_b, R=R, t=t)


# --- formatting ---------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_rows(rows: list, fmt: str) -> str:
    if fmt == "json":
        clean = []
        for r in rows:
            d = {k: r.get(k) for k in COLUMNS}
            if r.get("solution") is not None:
                d["solution"] = r["solution"]
            clean.append(d)
        return json.dumps(clean, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(r.get(k)) for k in COLUMNS])
    return buf.getvalue()


# --- argument parsing ------------------------------------------------------------


def _parse_sweep(text: str) -> tuple:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    return start, stop, step


def _parse_rates(text: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" in part:
            t, r = part.split("=", 1)
            out[int(t)] = float(r)
        else:
            out[None] = float(part)
    return out


def _csv_list(text: str) -> list:
    return [p.strip() for p in text.split(",") if p.strip()]


def _load_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file with option defaults")
    common.add_argument("--system", type=_csv_list, default=["baseline", "naive_wom", "cp_wom"],
                        help="comma-separated: baseline, naive_wom, cp_wom")
    common.add_argument("--alpha", type=float, help="single storage rate")
    common.add_argument("--sweep", type=_parse_sweep, help="start:stop:step alpha sweep")
    common.add_argument("--t", type=lambda s: [int(x) for x in _csv_list(s)], default=[2],
                        help="comma-separated write counts")
    common.add_argument("--rate", type=_parse_rates, default={},
                        help="per-write rate R, or t=R pairs (e.g. 0.77 or 3=0.62,4=0.5)")
    common.add_argument("--gamma1", type=float, help="CP-WOM GC threshold (default: optimal)")
    common.add_argument("--simulate", action="store_true", help="also run the FTL simulator")
    common.add_argument("--check", type=float, metavar="TOL",
                        help="exit 1 if any simulated point has relative error > TOL")
    common.add_argument("--blocks", type=int, default=2048)
    common.add_argument("--pages-per-block", type=int, default=256)
    common.add_argument("--writes", type=int, default=10_000_000, help="measured writes")
    common.add_argument("--warmup", type=int, help="warm-up writes (default U + 2*writes)")
    common.add_argument("--seed", type=int, default=int(os.environ.get("WOMLAB_SEED", "0")))
    common.add_argument("--jobs", type=int, default=1, help="parallel simulation workers")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--output", help="write to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="womlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="evaluate closed-form erasure factors")
    sub.add_parser("simulate", parents=[common], help="simulate and compare with the models")
    cx = sub.add_parser("crossover", help="alpha where two systems have equal EF")
    cx.add_argument("system_a")
    cx.add_argument("system_b")
    cx.add_argument("--rate", type=float, default=None)
    cx.add_argument("--t", type=int, default=2)
    return parser


def _spec_from_args(args, sim: bool) -> SweepSpec:
    if args.alpha is not None and args.sweep is not None:
        raise UsageError("use either --alpha or --sweep")
    if args.alpha is not None:
        rng = (args.alpha, args.alpha, 1.0)
    elif args.sweep is not None:
        rng = args.sweep
    else:
        raise UsageError("one of --alpha or --sweep is required")
    overrides = {
        "blocks": args.blocks, "pages_per_block": args.pages_per_block,
        "writes": args.writes, "warmup": args.warmup, "seed": args.seed,
    }
    return SweepSpec(rng, args.system, args.t, args.rate, args.gamma1, sim, overrides)


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            sp = parser._subparsers._group_actions[0].choices[args.command]
            sp.set_defaults(**_load_config(args.config))
            args = parser.parse_args(argv)

        if args.command == "crossover":
            try:
                x = cmd_crossover(args.system_a, args.system_b, args.rate, args.t)
            except NoCrossoverError as e:
                print(f"womlab: {e}", file=sys.stderr)
                return 1
            print(f"{x:.4f}")
            return 0

        sim = args.command == "simulate" or args.simulate
        spec = _spec_from_args(args, sim)
        rows = cmd_simulate(spec, args.jobs) if sim else cmd_analytic(spec)
    except (UsageError, ValueError) as e:
        print(f"womlab: error: {e}", file=sys.stderr)
        return 2
    _emit(format_rows(rows, args.format), args.output)
    if sim and args.check is not None:
        bad = [r for r in rows if r["rel_err"] is not None and r["rel_err"] > args.check]
        if bad:
            for r in bad:
                print(f"womlab: {r['system']} alpha={r['alpha']} rel_err={r['rel_err']:.4f} "
                      f"> {args.check}", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
