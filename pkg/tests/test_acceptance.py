"""Exit criteria for the package, one test per criterion."""

import itertools
import math
import time

import numpy as np
import pytest

from womlab.analytic import (
    FIXED_RATE_T2,
    System,
    SystemParams,
    cp_gamma2,
    ef_baseline,
    ef_cp_given_gamma1,
    ef_cp_multiwrite,
    ef_cp_optimal,
    ef_naive,
    max_sum_rate,
)
from womlab.cli import cmd_crossover
from womlab.ftl_sim import FtlState, SimConfig, check_invariants, run
from womlab.numerics import BRANCH_POINT, lambert_w0
from womlab.wom_codec import CellState, rs_decode, rs_encode

Z, BLOCKS, WRITES, SEED = 256, 2048, 10_000_000, 20160101

SIM_POINTS = (
    [("baseline", a) for a in (0.1, 0.3, 0.5, 0.7)]
    + [("naive_wom", a) for a in (0.1, 0.3, 0.5)]
    + [("cp_wom", a) for a in (0.1, 0.3, 0.5, 0.7)]
)


def test_c01_naive_baseline_crossover(acceptance_log):
    t0 = time.perf_counter()
    x = cmd_crossover("naive_wom", "baseline", 0.77)
    dt = time.perf_counter() - t0
    ok = abs(x - 0.6442) <= 5e-4 and dt < 1.0
    acceptance_log(1, ok, f"crossover(naive R=0.77, baseline) = {x:.5f} (0.6442 +- 0.0005), {dt:.3f} s")
    assert ok


def test_c02_fixed_rate_bound(acceptance_log):
    s = max_sum_rate(2, fixed_rate=True)
    ok = s == 1.54 and FIXED_RATE_T2 == 1.54 / 2
    acceptance_log(2, ok, f"max_sum_rate(2, fixed) = {s}, R = {FIXED_RATE_T2} = 1.54/2")
    assert ok


def test_c03_cp_dominates_baseline(acceptance_log):
    t0 = time.perf_counter()
    alphas = np.round(np.arange(0.05, 0.9501, 0.01), 2)
    gaps = [ef_baseline(a).ef - ef_cp_optimal(a).ef for a in alphas]
    dt = time.perf_counter() - t0
    ok = len(alphas) == 91 and min(gaps) > 0 and dt < 10.0
    acceptance_log(3, ok, f"EF_cp < EF_baseline on {len(alphas)} points, min gap {min(gaps):.3e}, {dt:.2f} s")
    assert ok


def test_c04_small_alpha_limits(acceptance_log):
    cp = ef_cp_optimal(0.05).ef
    nv = ef_naive(0.05, 0.77, 2).ef
    ok = abs(cp - 2 / 3) <= 0.02 * 2 / 3 and abs(nv - 0.5) <= 0.02 * 0.5
    acceptance_log(4, ok, f"EF_cp(0.05) = {cp:.5f} (2/3 +- 2%), EF_naive(0.05) = {nv:.5f} (1/2 +- 2%)")
    assert ok


def test_c05_naive_cp_crossover(acceptance_log):
    x = cmd_crossover("naive_wom", "cp_wom", 0.77)
    ok = 0.50 <= x <= 0.58
    acceptance_log(5, ok, f"crossover(naive, cp) = {x:.4f} in [0.50, 0.58]")
    assert ok


def test_c06_multiwrite_reduces_to_two_writes(acceptance_log):
    errs = {a: abs(ef_cp_multiwrite(a, 2).ef - ef_cp_optimal(a).ef) for a in (0.2, 0.5, 0.8)}
    ok = max(errs.values()) <= 1e-6
    acceptance_log(6, ok, "max |EF_t=2 - EF*_2| = " + f"{max(errs.values()):.2e} over alpha in (0.2, 0.5, 0.8)")
    assert ok


def _analytic_for(system, params):
    a = params.alpha
    if system == "baseline":
        return ef_baseline(a), None
    if system == "naive_wom":
        return ef_naive(a, round(0.77 * Z) / Z, 2), None
    opt = ef_cp_optimal(a)
    return opt, opt.solution["gamma1"]


@pytest.fixture(scope="module")
def sim_results():
    out = {}
    for system, alpha in SIM_POINTS:
        params = SystemParams.from_alpha(alpha, Z=Z, blocks=BLOCKS)
        res, g1 = _analytic_for(system, params)
        report = run(SimConfig(system, params, R=0.77, gamma1=g1,
                               measured_writes=WRITES, seed=SEED))
        out[(system, alpha)] = (res, g1, report)
    return out


def test_c07_simulator_matches_models(sim_results, acceptance_log):
    lines, ok = [], True
    for (system, alpha), (res, _, rep) in sim_results.items():
        err = abs(rep.ef - res.ef) / res.ef
        good = err <= 0.05 and rep.wall_time_seconds <= 120
        ok &= good
        lines.append(f"{system}@{alpha}: sim {rep.ef:.4f} vs {res.ef:.4f} ({err:.2%}, {rep.wall_time_seconds:.1f} s)")
    acceptance_log(7, ok, "; ".join(lines))
    assert ok


def test_c08_measured_gamma2(sim_results, acceptance_log):
    lines, ok = [], True
    for alpha in (0.3, 0.5, 0.7):
        res, g1, rep = sim_results[("cp_wom", alpha)]
        g2 = cp_gamma2(rep.alpha, g1)
        err = abs(rep.gamma2_measured - g2) / g2
        ok &= err <= 0.05
        lines.append(f"alpha={alpha}: {rep.gamma2_measured:.4f} vs {g2:.4f} ({err:.2%})")
    acceptance_log(8, ok, "; ".join(lines))
    assert ok


def _rs_exhaustive():
    downs = 0
    for m1, m2 in itertools.product(range(4), repeat=2):
        s0 = CellState.erased(3)
        s1 = rs_encode(1, m1, s0)
        s2 = rs_encode(2, m2, s1)
        if rs_decode(s1) != m1 or rs_decode(s2) != m2:
            return None
        downs += sum(a > b for a, b in zip(s0.cells + s1.cells, s1.cells + s2.cells))
    return downs


def test_c09_wom_codec_exhaustive(acceptance_log):
    downs = _rs_exhaustive()
    dt = min(
        (lambda t0: (_rs_exhaustive(), time.perf_counter() - t0)[1])(time.perf_counter())
        for _ in range(20)
    )
    ok = downs == 0 and dt < 1e-3
    acceptance_log(9, ok, f"16 message pairs round-trip, {downs} 1->0 transitions, {dt * 1e6:.0f} us")
    assert ok


def test_c10_lambert_residual(acceptance_log):
    rng = np.random.default_rng(10)
    xs = np.concatenate([
        BRANCH_POINT + rng.uniform(0.0, 1e-9, 1000),
        BRANCH_POINT + 10.0 ** rng.uniform(-9, 0, 3000),
        rng.uniform(BRANCH_POINT, 10.0, 3000),
        10.0 ** rng.uniform(-300, 6, 3000),
    ])
    worst = 0.0
    for x in xs:
        w = lambert_w0(x)
        worst = max(worst, abs(w * math.exp(w) - x) / max(1.0, abs(x)))
        assert w >= -1.0
    ok = xs.size == 10_000 and worst <= 1e-12
    acceptance_log(10, ok, f"max scaled residual {worst:.2e} over {xs.size} points")
    assert ok


def _invariant_run(system, seed):
    cfg = SimConfig(system, SystemParams.from_alpha(0.6, Z=Z, blocks=BLOCKS), gamma1=0.45,
                    measured_writes=1_000_000, seed=seed)
    state = FtlState(cfg)
    state.write(np.arange(cfg.params.U))
    rng = np.random.default_rng(seed)
    for _ in range(20):
        # the kernel rejects any slot transition outside its lifecycle
        state.write(rng.integers(0, cfg.params.U, size=50_000))
        check_invariants(state)
        assert int(state.valid.sum()) == cfg.params.U
    return state


def test_c11_invariant_suite(acceptance_log):
    ok, lines = True, []
    for system in System:
        a = _invariant_run(system, 5)
        b = _invariant_run(system, 5)
        same = all(
            np.array_equal(getattr(a, f), getattr(b, f))
            for f in ("slot_state", "slot_owner", "lmap", "valid", "stage", "counters")
        )
        ok &= same
        lines.append(f"{system.value}: E={a.E}, deterministic={same}")
    acceptance_log(11, ok, "conservation, lifecycle and map checks on 1e6 writes; " + "; ".join(lines))
    assert ok
